"""HTTP front for the simulated location provider.

The provider only ever sees what a phone would send: bare fingerprint sets,
never which one is real.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from ..errors import IntegrityError
from ..locator import BACKENDS, RadioMap, result_records, serve_bundle
from .schemas import BundleRequest, BundleResponse, Health, LocateRequest, ResultRecord


def create_app(rmap: RadioMap, *, k_aps: int = 5, k_nn: int = 1, sigma: float = 4.0) -> FastAPI:
    app = FastAPI(title="fpcloak location provider")

    def options(backend: str) -> dict:
        return {"k_aps": k_aps, "k_nn": k_nn} if backend == "RADAR" else {"sigma": sigma}

    @app.get("/health", response_model=Health)
    def health():
        return Health(calibration_points=len(rmap), aps=len(rmap.ap_ids), backends=list(BACKENDS))

    @app.post("/locate", response_model=ResultRecord)
    def locate(req: LocateRequest):
        (rec,) = result_records(serve_bundle(rmap, [req.observations], req.backend, **options(req.backend)))
        return rec

    @app.post("/bundles", response_model=BundleResponse)
    def bundles(req: BundleRequest):
        sizes = {len(s) for s in req.sets}
        if len(sizes) > 1 or 0 in sizes:
            raise HTTPException(422, "all sets in a bundle must be non-empty and the same size")
        try:
            res = serve_bundle(rmap, req.sets, req.backend, **options(req.backend))
        except IntegrityError as exc:
            raise HTTPException(422, str(exc)) from exc
        return BundleResponse(results=result_records(res, req.session_id, req.step))

    return app
