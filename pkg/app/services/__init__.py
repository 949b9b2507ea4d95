"""
Service layer for the accident detection engine.
Orchestrates stream processing, scenario generation and benchmarking.
"""

import time
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

import structlog

from app.config import EngineConfig
from app.core import AccidentDetectionError
from app.models import AccidentEvent, CollisionLabel, EvaluationReport
from app.models.scenario import ScenarioSpec
from app.services.evaluation import build_report, evaluate_scenario
from app.services.pipeline import PipelineResult, run_bench, run_pipeline
from app.services.scenario_sim import DEFAULT_SUITE_SEED, GeneratedScenario, builtin_suite, generate


logger = structlog.get_logger(__name__)

STREAM_SUFFIXES = (".jsonl", ".ndjson")


class AccidentDetectionService:
    """Main entry point shared by the CLI and the web API."""

    def __init__(self, config: Optional[EngineConfig] = None, workers: int = 1):
        self.config = config or EngineConfig()
        self.workers = workers

    def process_stream(
        self,
        lines: Iterable[Union[str, bytes]],
        name: str = "stream",
        trace: Optional[List[Dict[str, Any]]] = None,
    ) -> PipelineResult:
        """Run detection over one stream."""
        start_time = time.perf_counter()
        with structlog.contextvars.bound_contextvars(stream=name):
            result = run_pipeline(lines, self.config, trace)
        logger.debug("stream_timing", stream=name, seconds=round(time.perf_counter() - start_time, 4))
        return result

    def process_batch(self, folder_path: str) -> Dict[str, PipelineResult]:
        """Process every stream file in a folder. Failing files are logged and skipped."""
        folder = Path(folder_path)
        if not folder.is_dir():
            raise ValueError(f"Folder path does not exist: {folder_path}")

        files = sorted(p for p in folder.iterdir() if p.suffix.lower() in STREAM_SUFFIXES)
        logger.info("batch_started", folder=str(folder), files=len(files))

        results: Dict[str, PipelineResult] = {}
        for path in files:
            try:
                with path.open("rb") as handle:
                    results[path.name] = self.process_stream(handle, name=path.name)
            except AccidentDetectionError as e:
                logger.error("stream_failed", stream=path.name, error=str(e))
        return results

    def evaluate(
        self,
        events: List[AccidentEvent],
        truth: List[CollisionLabel],
        patterns: int,
        name: str = "stream",
    ) -> EvaluationReport:
        """Score events of one stream against its ground truth."""
        scored = evaluate_scenario(name, events, truth, patterns, self.config.evaluation.truth_window)
        return build_report([scored])

    def simulate(self, spec: ScenarioSpec) -> GeneratedScenario:
        return generate(spec)

    def scenarios(self, seed: int = DEFAULT_SUITE_SEED) -> List[ScenarioSpec]:
        return builtin_suite(seed)

    def bench(
        self,
        specs: Optional[List[ScenarioSpec]] = None,
        seed: int = DEFAULT_SUITE_SEED,
    ) -> Tuple[EvaluationReport, Dict[str, List[AccidentEvent]]]:
        """Run the builtin benchmark seeded from ``seed`` (or ``specs``) end to end."""
        return run_bench(self.config, specs, self.workers, seed)
