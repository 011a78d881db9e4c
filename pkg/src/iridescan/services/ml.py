"""ML management: dataset wizard, model registry, analysis and retrain jobs.

Retraining never overwrites: every run produces a new model version, and
older versions stay retrievable so an operator can roll back by activating
one of them.  Analysis locks the target inspection for the lifetime of its
job; the lock is released on success, failure, and cancellation alike.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, replace

from .. import detect, imaging
from ..dataset import (
    AnnotatedImage,
    AugmentationSpec,
    Dataset,
    SplitError,
    VocParseError,
    augment,
    parse_voc,
    split_dataset,
)
from ..domain import (
    BoundingBox,
    DefectAnnotation,
    DefectClass,
    PipelineParams,
    format_timestamp,
    parse_timestamp,
    SOURCE_AUTOMATIC,
)
from ..jobs import Job
from ..store import NotFoundError as StoreNotFound
from .errors import ConflictError, NotFoundError, ValidationError

DATASETS = "datasets"
MODELS = "models"
DEFAULT_FAMILY = "histogram"

KIND_ANALYZE = "analyze_inspection"
KIND_RETRAIN = "retrain_model"


@dataclass(frozen=True)
class ModelVersion:
    """An immutable trained-detector artifact in the registry."""

    id: str
    family: str
    version: int
    created_at: object
    trained_on: str
    model: detect.HistogramModel
    metrics: detect.EvalReport | None
    active: bool

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "family": self.family,
            "version": self.version,
            "created_at": format_timestamp(self.created_at),
            "trained_on": self.trained_on,
            "model": self.model.to_dict(),
            "metrics": self.metrics.to_dict() if self.metrics else None,
            "active": self.active,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelVersion":
        return cls(
            id=data["id"],
            family=data["family"],
            version=data["version"],
            created_at=parse_timestamp(data["created_at"]),
            trained_on=data["trained_on"],
            model=detect.HistogramModel.from_dict(data["model"]),
            metrics=detect.EvalReport.from_dict(data["metrics"])
            if data.get("metrics")
            else None,
            active=data["active"],
        )


class MlService:
    def __init__(self, ctx):
        self.ctx = ctx

    def _load_frame(self, ref: str):
        return imaging.read_ppm(self.ctx.blobs.get_blob(ref))

    # -- dataset wizard -----------------------------------------------------

    def _load_dataset(self, dataset_id: str) -> tuple[Dataset, int]:
        try:
            doc, revision = self.ctx.documents.get_document(DATASETS, dataset_id)
        except StoreNotFound:
            raise NotFoundError(f"no dataset {dataset_id!r}") from None
        return Dataset.from_dict(doc), revision

    def _save_dataset(self, dataset: Dataset, expected_revision: int) -> Dataset:
        self.ctx.documents.put_document(
            DATASETS, dataset.id, dataset.to_dict(), expected_revision=expected_revision
        )
        return dataset

    def create_dataset(self, name: str, classes: list[str]) -> Dataset:
        if not name:
            raise ValidationError("dataset name must be non-empty")
        if not classes or len(set(classes)) != len(classes) or not all(classes):
            raise ValidationError("classes must be non-empty and unique")
        dataset = Dataset(
            id=f"ds-{uuid.uuid4().hex[:12]}",
            name=name,
            classes=tuple(DefectClass(c) for c in classes),
        )
        return self._save_dataset(dataset, expected_revision=0)

    def get_dataset(self, dataset_id: str) -> Dataset:
        return self._load_dataset(dataset_id)[0]

    def list_datasets(self) -> list[Dataset]:
        return [
            Dataset.from_dict(doc)
            for _, doc, _ in self.ctx.documents.list_documents(DATASETS, sort="id")
        ]

    def add_image(
        self,
        dataset_id: str,
        ppm_payload: bytes,
        objects: list[tuple[str, BoundingBox]] | None = None,
        voc_xml: str | None = None,
    ) -> Dataset:
        """Wizard step: store the image as a blob and attach its annotations."""
        dataset, revision = self._load_dataset(dataset_id)
        try:
            frame = imaging.read_ppm(ppm_payload)
        except ValueError as exc:
            raise ValidationError(f"bad PPM payload: {exc}") from None
        if voc_xml is not None:
            try:
                parsed = parse_voc(voc_xml)
            except VocParseError as exc:
                raise ValidationError(str(exc)) from None
            if (parsed.width, parsed.height) != (frame.width, frame.height):
                raise ValidationError("annotation size disagrees with the image")
            parsed_objects = parsed.objects
        else:
            parsed_objects = tuple(
                (DefectClass(name), box) for name, box in (objects or [])
            )
        known = {c.name for c in dataset.classes}
        for cls, box in parsed_objects:
            if cls.name not in known:
                raise ValidationError(f"class {cls.name!r} not in dataset classes")
            if not (0 <= box.x_min < box.x_max <= frame.width
                    and 0 <= box.y_min < box.y_max <= frame.height):
                raise ValidationError("object box outside image bounds")
        ref = self.ctx.blobs.put_blob(imaging.write_ppm(frame))
        image = AnnotatedImage(
            image_ref=ref, width=frame.width, height=frame.height, objects=parsed_objects
        )
        # adding an image invalidates any existing split
        updated = replace(dataset, images=dataset.images + (image,), split=None)
        return self._save_dataset(updated, revision)

    def run_augment(self, dataset_id: str, spec: AugmentationSpec, seed: int) -> Dataset:
        """Apply the spec to every image, appending the results."""
        dataset, revision = self._load_dataset(dataset_id)
        new_images = []
        provenance = list(dataset.provenance)
        for image in dataset.images:
            frame = self._load_frame(image.image_ref)
            for out_image, out_frame in augment(image, frame, spec, seed):
                ref = self.ctx.blobs.put_blob(imaging.write_ppm(out_frame))
                new_images.append(replace(out_image, image_ref=ref))
                provenance.append(
                    {
                        "source_ref": image.image_ref,
                        "result_ref": ref,
                        "op": out_image.image_ref.split("#", 1)[1]
                        if "#" in out_image.image_ref
                        else "",
                        "seed": seed,
                    }
                )
        updated = replace(
            dataset,
            images=dataset.images + tuple(new_images),
            provenance=tuple(provenance),
            split=None,
        )
        return self._save_dataset(updated, revision)

    def run_split(
        self, dataset_id: str, train_fraction: float, seed: int, stratified: bool = True
    ) -> Dataset:
        dataset, revision = self._load_dataset(dataset_id)
        try:
            updated = split_dataset(dataset, train_fraction, seed, stratified)
        except SplitError as exc:
            raise ValidationError(str(exc)) from None
        return self._save_dataset(updated, revision)

    # -- model registry -------------------------------------------------------

    def _load_model_version(self, version_id: str) -> tuple[ModelVersion, int]:
        try:
            doc, revision = self.ctx.documents.get_document(MODELS, version_id)
        except StoreNotFound:
            raise NotFoundError(f"no model version {version_id!r}") from None
        return ModelVersion.from_dict(doc), revision

    def list_models(self, family: str | None = None) -> list[ModelVersion]:
        rows = self.ctx.documents.list_documents(MODELS, sort="version")
        versions = [ModelVersion.from_dict(doc) for _, doc, _ in rows]
        if family is not None:
            versions = [v for v in versions if v.family == family]
        return versions

    def get_model(self, version_id: str) -> ModelVersion:
        return self._load_model_version(version_id)[0]

    def active_model(self, family: str = DEFAULT_FAMILY) -> ModelVersion | None:
        for version in self.list_models(family):
            if version.active:
                return version
        return None

    def activate_model(self, version_id: str) -> ModelVersion:
        """Mark exactly one version active within its family."""
        target, _ = self._load_model_version(version_id)
        for version in self.list_models(target.family):
            if version.active and version.id != version_id:
                doc, revision = self.ctx.documents.get_document(MODELS, version.id)
                doc["active"] = False
                self.ctx.documents.put_document(MODELS, version.id, doc, revision)
        doc, revision = self.ctx.documents.get_document(MODELS, version_id)
        doc["active"] = True
        self.ctx.documents.put_document(MODELS, version_id, doc, revision)
        return self.get_model(version_id)

    def register_model_version(
        self,
        model: detect.HistogramModel,
        metrics: detect.EvalReport | None,
        family: str = DEFAULT_FAMILY,
    ) -> ModelVersion:
        existing = self.list_models(family)
        version = ModelVersion(
            id=f"mv-{uuid.uuid4().hex[:12]}",
            family=family,
            version=max((v.version for v in existing), default=0) + 1,
            created_at=self.ctx.clock(),
            trained_on=model.trained_on,
            model=model,
            metrics=metrics,
            active=not existing,  # the first version serves by default
        )
        self.ctx.documents.put_document(MODELS, version.id, version.to_dict())
        return version

    # -- jobs -------------------------------------------------------------------

    def start_retrain(
        self, dataset_id: str, params: PipelineParams | None = None
    ) -> Job:
        dataset, _ = self._load_dataset(dataset_id)
        if dataset.split is None:
            raise ValidationError("dataset has no train/test split yet")
        params = params or self.ctx.default_params
        return self.ctx.queue.enqueue(
            KIND_RETRAIN, {"dataset_id": dataset_id, "params": params.to_dict()}
        )

    def start_analysis(self, inspection_id: str, model_version_id: str) -> Job:
        """Lock the inspection and queue its analysis."""
        entry = self.ctx.entrypoint
        inspection = entry.get_inspection(inspection_id)
        if inspection.locked:
            raise ConflictError(
                f"inspection {inspection_id} already has an analysis pending",
                current_revision=inspection.revision,
            )
        self.get_model(model_version_id)  # not-found check before locking
        locked = replace(inspection, locked=True)
        entry._save(locked, inspection.revision)
        try:
            return self.ctx.queue.enqueue(
                KIND_ANALYZE,
                {"inspection_id": inspection_id, "model_version_id": model_version_id},
            )
        except Exception:
            fresh = entry.get_inspection(inspection_id)
            entry._save(replace(fresh, locked=False), fresh.revision)
            raise

    def job_status(self, job_id: str) -> Job:
        from ..jobs import UnknownJobError

        try:
            return self.ctx.queue.get_job(job_id)
        except UnknownJobError:
            raise NotFoundError(f"no job {job_id!r}") from None

    def list_jobs(self, state: str | None = None) -> list[Job]:
        try:
            return self.ctx.queue.list_jobs(state)
        except ValueError as exc:
            raise ValidationError(str(exc)) from None

    def cancel_job(self, job_id: str) -> Job:
        from ..jobs import JobStateError, UnknownJobError

        try:
            return self.ctx.queue.cancel(job_id)
        except UnknownJobError:
            raise NotFoundError(f"no job {job_id!r}") from None
        except JobStateError as exc:
            raise ConflictError(str(exc)) from None

    # -- job handlers -------------------------------------------------------------

    def handle_retrain(self, payload: dict, job_ctx) -> str:
        dataset, _ = self._load_dataset(payload["dataset_id"])
        params = PipelineParams.from_dict(payload["params"])
        job_ctx.check_cancelled()
        model = detect.train_histogram_model(
            dataset, list(dataset.classes), params, self._load_frame
        )
        job_ctx.check_cancelled()
        metrics = None
        if dataset.split and dataset.split.test:
            metrics = detect.evaluate(
                detect.HistogramDetector(model), dataset, 0.5, self._load_frame
            )
        version = self.register_model_version(model, metrics)
        return version.id

    def handle_analysis(self, payload: dict, job_ctx) -> str:
        inspection_id = payload["inspection_id"]
        version, _ = self._load_model_version(payload["model_version_id"])
        entry = self.ctx.entrypoint
        inspection = entry.get_inspection(inspection_id)
        produced = []
        for frame_index, ref in enumerate(inspection.frame_refs):
            job_ctx.check_cancelled()
            frame = self._load_frame(ref)
            for detection in detect.predict_with_model(version.model, frame):
                produced.append(
                    DefectAnnotation(
                        frame_index=frame_index,
                        detection=detection,
                        source=SOURCE_AUTOMATIC,
                        params=version.model.proposal_params,
                        created_at=self.ctx.clock(),
                        screenshot_ref=ref,
                    )
                )
        job_ctx.check_cancelled()
        # single atomic write: annotations appended and the lock released
        updated = replace(
            inspection,
            annotations=inspection.annotations + tuple(produced),
            locked=False,
        )
        entry._save(updated, inspection.revision)
        return inspection_id

    def unlock_on_terminal(self, job: Job) -> None:
        """Queue hook: failed or cancelled analyses must release the lock."""
        if job.kind != KIND_ANALYZE:
            return
        inspection_id = job.payload.get("inspection_id")
        try:
            inspection = self.ctx.entrypoint.get_inspection(inspection_id)
        except NotFoundError:
            return
        if inspection.locked:
            self.ctx.entrypoint._save(
                replace(inspection, locked=False), inspection.revision
            )


def validate_analysis_payload(payload: dict) -> None:
    if not payload.get("inspection_id") or not payload.get("model_version_id"):
        raise ValueError("payload needs inspection_id and model_version_id")


def validate_retrain_payload(payload: dict) -> None:
    if not payload.get("dataset_id"):
        raise ValueError("payload needs dataset_id")
    if "params" not in payload:
        raise ValueError("payload needs params")
