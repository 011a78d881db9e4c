"""Request and response models for the REST API.

Domain values (annotations, bundles, pipeline params) travel in their
canonical JSON form and are validated by the domain module itself, so those
fields appear here as plain dicts; pydantic models cover the envelopes.
"""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class LoginRequest(BaseModel):
    username: str
    password: str


class TokenResponse(BaseModel):
    token: str
    username: str
    role: str
    issued_at: str
    expires_at: str


class UserCreateRequest(BaseModel):
    username: str
    password: str
    role: str


class UserResponse(BaseModel):
    username: str
    role: str


class PasswordRequest(BaseModel):
    password: str


class RoleRequest(BaseModel):
    role: str


class InspectionCreateRequest(BaseModel):
    title: str
    created_at: Optional[str] = None
    tags: list[str] = Field(default_factory=list)


class InspectionResponse(BaseModel):
    id: str
    title: str
    created_at: str
    frame_refs: list[str]
    depth_ref: Optional[str]
    annotations: list[dict]
    tags: list[str]
    locked: bool
    revision: int


class InspectionPageResponse(BaseModel):
    items: list[InspectionResponse]
    page: int
    page_size: int
    total: int


class PutDefectsRequest(BaseModel):
    annotations: list[dict]
    expected_revision: int


class RevisionResponse(BaseModel):
    revision: int


class BundleResponse(BaseModel):
    bundle: dict
    revision: int
    bundle_hash: str


class UpsertContentRequest(BaseModel):
    bundle: dict


class UpsertContentResponse(BaseModel):
    revision: int
    bundle_hash: str


class BlobUploadResponse(BaseModel):
    blob_id: str


class MissingBlobsRequest(BaseModel):
    blob_ids: list[str]


class MissingBlobsResponse(BaseModel):
    missing: list[str]


class TagsRequest(BaseModel):
    tags: list[str]
    expected_revision: Optional[int] = None


class TagListResponse(BaseModel):
    tags: list[str]


class ClassesRequest(BaseModel):
    classes: list[str]


class ClassesResponse(BaseModel):
    classes: list[str]


class StatisticsResponse(BaseModel):
    top_defects: list[dict]
    monthly_defect_rate: list[dict]


class DatasetCreateRequest(BaseModel):
    name: str
    classes: list[str]


class DatasetResponse(BaseModel):
    id: str
    name: str
    classes: list[str]
    image_count: int
    train_count: Optional[int]
    test_count: Optional[int]
    provenance_count: int


class AddImageRequest(BaseModel):
    image_ppm_base64: str
    objects: Optional[list[dict]] = None
    voc_xml: Optional[str] = None


class AugmentRequest(BaseModel):
    ops: list[dict]
    seed: int = 0


class SplitRequest(BaseModel):
    train_fraction: float
    seed: int = 0
    stratified: bool = True


class RetrainRequest(BaseModel):
    params: Optional[dict] = None


class ModelVersionResponse(BaseModel):
    id: str
    family: str
    version: int
    created_at: str
    trained_on: str
    active: bool
    metrics: Optional[dict]


class AnalyzeRequest(BaseModel):
    inspection_id: str
    model_version_id: str


class JobResponse(BaseModel):
    id: str
    kind: str
    payload: dict
    state: str
    enqueued_at: Optional[str]
    started_at: Optional[str]
    finished_at: Optional[str]
    result_ref: Optional[str]
    error: Optional[str]
