"""
Web entry point for the accident detection engine.
Initializes logging and serves the FastAPI application.
"""

from app.config import settings
from app.core.logging import setup_logging
from app.web.routes import app


def create_app():
    """Create and configure the FastAPI application."""
    setup_logging(settings.log_level, settings.log_format, settings.log_file)
    return app


if __name__ == "__main__":
    app_instance = create_app()

    import uvicorn
    uvicorn.run(app_instance, host=settings.host, port=settings.port)
