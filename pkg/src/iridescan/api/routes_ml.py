"""ML service routes: dataset wizard, model registry, analysis jobs queue."""

from __future__ import annotations

import base64

from fastapi import APIRouter, Depends, Query

from ..dataset import AugmentationSpec, Dataset
from ..domain import BoundingBox, PipelineParams
from ..services import AppContext, ValidationError
from .deps import get_ctx, require_admin, require_operator
from .schemas import (
    AddImageRequest,
    AnalyzeRequest,
    AugmentRequest,
    DatasetCreateRequest,
    DatasetResponse,
    JobResponse,
    ModelVersionResponse,
    RetrainRequest,
    SplitRequest,
)

router = APIRouter(prefix="/api/ml", tags=["ml"])


def _dataset_summary(dataset: Dataset) -> dict:
    return {
        "id": dataset.id,
        "name": dataset.name,
        "classes": [c.name for c in dataset.classes],
        "image_count": len(dataset.images),
        "train_count": len(dataset.split.train) if dataset.split else None,
        "test_count": len(dataset.split.test) if dataset.split else None,
        "provenance_count": len(dataset.provenance),
    }


def _model_summary(version) -> dict:
    data = version.to_dict()
    del data["model"]
    return data


def _job_dict(job) -> dict:
    return job.to_dict()


@router.post("/datasets", response_model=DatasetResponse, status_code=201)
def create_dataset(
    body: DatasetCreateRequest,
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_operator),
):
    return _dataset_summary(ctx.ml.create_dataset(body.name, body.classes))


@router.get("/datasets", response_model=list[DatasetResponse])
def list_datasets(ctx: AppContext = Depends(get_ctx), _=Depends(require_operator)):
    return [_dataset_summary(d) for d in ctx.ml.list_datasets()]


@router.get("/datasets/{dataset_id}", response_model=DatasetResponse)
def get_dataset(
    dataset_id: str,
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_operator),
):
    return _dataset_summary(ctx.ml.get_dataset(dataset_id))


@router.post("/datasets/{dataset_id}/images", response_model=DatasetResponse)
def add_image(
    dataset_id: str,
    body: AddImageRequest,
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_operator),
):
    try:
        payload = base64.b64decode(body.image_ppm_base64, validate=True)
    except Exception as exc:
        raise ValidationError(f"bad base64 image payload: {exc}") from None
    objects = None
    if body.objects is not None:
        try:
            objects = [
                (o["class"], BoundingBox.from_dict(o["box"])) for o in body.objects
            ]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed object: {exc}") from None
    updated = ctx.ml.add_image(dataset_id, payload, objects=objects, voc_xml=body.voc_xml)
    return _dataset_summary(updated)


@router.post("/datasets/{dataset_id}/augment", response_model=DatasetResponse)
def run_augment(
    dataset_id: str,
    body: AugmentRequest,
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_operator),
):
    try:
        spec = AugmentationSpec.from_dict({"ops": body.ops})
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed augmentation spec: {exc}") from None
    return _dataset_summary(ctx.ml.run_augment(dataset_id, spec, body.seed))


@router.post("/datasets/{dataset_id}/split", response_model=DatasetResponse)
def run_split(
    dataset_id: str,
    body: SplitRequest,
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_operator),
):
    return _dataset_summary(
        ctx.ml.run_split(dataset_id, body.train_fraction, body.seed, body.stratified)
    )


@router.post("/datasets/{dataset_id}/retrain", response_model=JobResponse, status_code=202)
def start_retrain(
    dataset_id: str,
    body: RetrainRequest | None = None,
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_admin),
):
    params = None
    if body and body.params is not None:
        try:
            params = PipelineParams.from_dict(body.params)
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed params: {exc}") from None
    return _job_dict(ctx.ml.start_retrain(dataset_id, params))


@router.get("/models", response_model=list[ModelVersionResponse])
def list_models(
    family: str | None = Query(None),
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_operator),
):
    return [_model_summary(v) for v in ctx.ml.list_models(family)]


@router.get("/models/{version_id}", response_model=ModelVersionResponse)
def get_model(
    version_id: str,
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_operator),
):
    return _model_summary(ctx.ml.get_model(version_id))


@router.post("/models/{version_id}/activate", response_model=ModelVersionResponse)
def activate_model(
    version_id: str,
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_admin),
):
    return _model_summary(ctx.ml.activate_model(version_id))


@router.post("/analyze", response_model=JobResponse, status_code=202)
def start_analysis(
    body: AnalyzeRequest,
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_operator),
):
    return _job_dict(ctx.ml.start_analysis(body.inspection_id, body.model_version_id))


@router.get("/jobs", response_model=list[JobResponse])
def list_jobs(
    state: str | None = Query(None),
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_operator),
):
    return [_job_dict(j) for j in ctx.ml.list_jobs(state)]


@router.get("/jobs/{job_id}", response_model=JobResponse)
def job_status(
    job_id: str,
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_operator),
):
    return _job_dict(ctx.ml.job_status(job_id))


@router.post("/jobs/{job_id}/cancel", response_model=JobResponse)
def cancel_job(
    job_id: str,
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_operator),
):
    return _job_dict(ctx.ml.cancel_job(job_id))
