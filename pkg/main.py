from pathlib import Path
from typing import Optional

import uvicorn
from fastapi import FastAPI
from fastapi.responses import RedirectResponse

from controllers import api_router
from core.prediction import load_bundle


def create_app(checkpoint_dir: Optional[Path] = None) -> FastAPI:
    app = FastAPI(
        description="Ticket labeling API. Predicts a label field of a bug report from its title and body.",
        docs_url="/docs"
    )
    app.state.bundle = load_bundle(Path(checkpoint_dir)) if checkpoint_dir is not None else None
    app.include_router(api_router)

    @app.get("/", include_in_schema=False)
    def root():
        return RedirectResponse(url="/docs")

    return app


def serve(checkpoint_dir: Path, host: str = "localhost", port: int = 8900) -> None:
    uvicorn.run(create_app(checkpoint_dir), host=host, port=port)


if __name__ == "__main__":
    serve(Path("checkpoint"))
