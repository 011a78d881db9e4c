"""Entrypoint service routes: inspections, defects, statistics, tags.

Frame and blob payloads are raw binary PPM bodies; everything else is JSON
in the canonical domain encoding.
"""

from __future__ import annotations

from fastapi import APIRouter, Depends, Query, Request, Response

from ..domain import DefectAnnotation
from ..services import AppContext, ValidationError
from .deps import get_ctx, require_admin, require_operator
from .schemas import (
    BlobUploadResponse,
    BundleResponse,
    ClassesRequest,
    ClassesResponse,
    InspectionCreateRequest,
    InspectionPageResponse,
    InspectionResponse,
    MissingBlobsRequest,
    MissingBlobsResponse,
    PutDefectsRequest,
    RevisionResponse,
    StatisticsResponse,
    TagListResponse,
    TagsRequest,
    UpsertContentRequest,
    UpsertContentResponse,
)

router = APIRouter(tags=["entrypoint"])

PPM_MEDIA_TYPE = "image/x-portable-pixmap"


def _parse_created_at(text):
    from ..domain import parse_timestamp

    if text is None:
        return None
    try:
        return parse_timestamp(text)
    except ValueError as exc:
        raise ValidationError(f"bad created_at: {exc}") from None


def _parse_annotations(raw: list[dict]) -> list[DefectAnnotation]:
    try:
        return [DefectAnnotation.from_dict(a) for a in raw]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed annotation: {exc}") from None


# -- blobs (declared before the parameterized inspection routes) -------------


@router.post("/api/inspections/blobs", response_model=BlobUploadResponse)
async def upload_blob(
    request: Request,
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_operator),
):
    data = await request.body()
    if not data:
        raise ValidationError("empty blob payload")
    return {"blob_id": ctx.blobs.put_blob(data)}


@router.post("/api/inspections/blobs/missing", response_model=MissingBlobsResponse)
def missing_blobs(
    body: MissingBlobsRequest,
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_operator),
):
    return {"missing": [b for b in body.blob_ids if not ctx.blobs.has_blob(b)]}


@router.get("/api/inspections/blobs/{blob_id}")
def get_blob(
    blob_id: str,
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_operator),
):
    return Response(ctx.blobs.get_blob(blob_id), media_type="application/octet-stream")


# -- inspections ---------------------------------------------------------------


@router.post("/api/inspections", response_model=InspectionResponse, status_code=201)
def create_inspection(
    body: InspectionCreateRequest,
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_operator),
):
    inspection = ctx.entrypoint.create_inspection(
        body.title, created_at=_parse_created_at(body.created_at), tags=tuple(body.tags)
    )
    return inspection.to_dict()


@router.get("/api/inspections", response_model=InspectionPageResponse)
def list_inspections(
    page: int = Query(1, ge=1),
    page_size: int = Query(20, ge=1, le=200),
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_operator),
):
    items, total = ctx.entrypoint.list_inspections(page=page, page_size=page_size)
    return {
        "items": [i.to_dict() for i in items],
        "page": page,
        "page_size": page_size,
        "total": total,
    }


@router.get("/api/inspections/{inspection_id}", response_model=InspectionResponse)
def get_inspection(
    inspection_id: str,
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_operator),
):
    return ctx.entrypoint.get_inspection(inspection_id).to_dict()


@router.put("/api/inspections/{inspection_id}", response_model=UpsertContentResponse)
def upsert_inspection(
    inspection_id: str,
    body: UpsertContentRequest,
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_operator),
):
    revision, digest = ctx.entrypoint.upsert_content(inspection_id, body.bundle)
    return {"revision": revision, "bundle_hash": digest}


@router.post("/api/inspections/{inspection_id}/frames", response_model=InspectionResponse)
async def upload_frame(
    inspection_id: str,
    request: Request,
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_operator),
):
    data = await request.body()
    return ctx.entrypoint.upload_frames(inspection_id, [data]).to_dict()


@router.get("/api/inspections/{inspection_id}/frames/{index}")
def get_frame(
    inspection_id: str,
    index: int,
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_operator),
):
    return Response(
        ctx.entrypoint.get_frame(inspection_id, index), media_type=PPM_MEDIA_TYPE
    )


@router.put("/api/inspections/{inspection_id}/depth", response_model=InspectionResponse)
async def set_depth(
    inspection_id: str,
    request: Request,
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_operator),
):
    data = await request.body()
    if not data:
        raise ValidationError("empty depth payload")
    return ctx.entrypoint.set_depth(inspection_id, data).to_dict()


# -- defects ---------------------------------------------------------------------


@router.put("/api/inspections/{inspection_id}/defects", response_model=RevisionResponse)
def put_defects(
    inspection_id: str,
    body: PutDefectsRequest,
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_operator),
):
    updated = ctx.entrypoint.put_defects(
        inspection_id, _parse_annotations(body.annotations), body.expected_revision
    )
    return {"revision": updated.revision}


@router.delete(
    "/api/inspections/{inspection_id}/defects/{index}",
    response_model=RevisionResponse,
)
def delete_defect(
    inspection_id: str,
    index: int,
    expected_revision: int = Query(...),
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_operator),
):
    updated = ctx.entrypoint.delete_defect(inspection_id, index, expected_revision)
    return {"revision": updated.revision}


@router.get("/api/inspections/{inspection_id}/bundle", response_model=BundleResponse)
def download_bundle(
    inspection_id: str,
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_operator),
):
    bundle, revision, digest = ctx.entrypoint.download_bundle(inspection_id)
    return {"bundle": bundle, "revision": revision, "bundle_hash": digest}


# -- statistics, tags, defect classes ----------------------------------------------


@router.get("/api/statistics", response_model=StatisticsResponse)
def statistics(
    source: str | None = Query(None, pattern="^(manual|automatic)$"),
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_operator),
):
    return ctx.entrypoint.statistics(source=source).to_dict()


@router.get("/api/tags", response_model=TagListResponse)
def list_tags(ctx: AppContext = Depends(get_ctx), _=Depends(require_operator)):
    return {"tags": ctx.entrypoint.list_tags()}


@router.put("/api/tags/{inspection_id}", response_model=InspectionResponse)
def tag_inspection(
    inspection_id: str,
    body: TagsRequest,
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_operator),
):
    updated = ctx.entrypoint.tag_inspection(
        inspection_id, tuple(body.tags), expected_revision=body.expected_revision
    )
    return updated.to_dict()


@router.get("/api/defects/classes", response_model=ClassesResponse)
def get_defect_classes(ctx: AppContext = Depends(get_ctx), _=Depends(require_operator)):
    return {"classes": ctx.entrypoint.get_defect_classes()}


@router.put("/api/defects/classes", response_model=ClassesResponse)
def set_defect_classes(
    body: ClassesRequest,
    ctx: AppContext = Depends(get_ctx),
    _=Depends(require_admin),
):
    return {"classes": ctx.entrypoint.set_defect_classes(body.classes)}
