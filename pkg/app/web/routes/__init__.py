"""
Web interface routes for the accident detection engine.
Provides FastAPI endpoints for running detection, listing scenarios and benchmarking.
"""

import json

import structlog
from fastapi import FastAPI, File, Form, HTTPException, UploadFile
from fastapi.responses import JSONResponse

from app import __version__
from app.config import dump_defaults, load_config
from app.core import AccidentDetectionError, ParseError
from app.services import AccidentDetectionService
from app.services.scenario_sim import DEFAULT_SUITE_SEED


logger = structlog.get_logger(__name__)

# Initialize FastAPI app
app = FastAPI(
    title="Accident Detection Engine",
    description="Collision detection over vehicle detection streams",
    version=__version__,
)

# Initialize services
detection_service = AccidentDetectionService(load_config())


@app.get("/api/health", response_class=JSONResponse)
async def api_health():
    return {"status": "ok", "version": __version__}


@app.get("/api/config/defaults", response_class=JSONResponse)
async def api_config_defaults():
    """Embedded engine defaults."""
    return json.loads(dump_defaults())


@app.post("/api/run", response_class=JSONResponse)
def api_run(file: UploadFile = File(...)):
    """Run detection over an uploaded detection stream (JSON lines)."""
    content = file.file.read()
    try:
        result = detection_service.process_stream(content.splitlines(), name=file.filename or "upload")
    except ParseError as e:
        logger.error("upload_rejected", filename=file.filename, error=str(e))
        raise HTTPException(status_code=400, detail=str(e))

    return {
        "frames": result.frames,
        "patterns": result.patterns,
        "events": [event.to_record() for event in result.events],
    }


@app.get("/api/scenarios", response_class=JSONResponse)
def api_scenarios():
    """Builtin benchmark scenarios."""
    return {
        "scenarios": [
            {
                "name": spec.name,
                "frame_count": spec.frame_count,
                "vehicles": len(spec.vehicles),
                "tier": spec.tier,
                "positive": spec.is_positive,
            }
            for spec in detection_service.scenarios()
        ]
    }


@app.post("/api/bench", response_class=JSONResponse)
def api_bench(seed: int = DEFAULT_SUITE_SEED):
    """Run the builtin benchmark and return its report."""
    try:
        report, _ = detection_service.bench(seed=seed)
    except AccidentDetectionError as e:
        logger.error("bench_failed", error=str(e))
        raise HTTPException(status_code=422, detail=str(e))
    return report.to_record()


@app.post("/api/process-batch", response_class=JSONResponse)
def api_process_batch(folder_path: str = Form(...)):
    """Run detection over every stream file in a server-side folder."""
    try:
        results = detection_service.process_batch(folder_path)
    except ValueError as e:
        raise HTTPException(status_code=404, detail=str(e))
    return {
        "processed_count": len(results),
        "results": {
            name: {"frames": r.frames, "patterns": r.patterns, "events": [e.to_record() for e in r.events]}
            for name, r in results.items()
        },
    }
