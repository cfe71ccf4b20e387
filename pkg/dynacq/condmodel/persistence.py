"""
Save and load fitted engines as versioned JSON documents.

Floats are written with their shortest round-trip representation, so a
reloaded engine reproduces densities to the last bit.
"""

import json
import logging
from pathlib import Path
from typing import Union

import numpy as np
from pydantic import ValidationError

from ..core.dataset import Classification, MinMaxStats, Regression
from ..core.errors import ConfigError, DataError, MissingFile
from .classcond import ClassConditionalModel
from .engine import FittedEngine, parse_engine
from .gaussian import GaussianParams
from .mixture import MixtureModel, as_mixture
from .schemas import MODEL_FORMAT_VERSION, MixtureDocument, ModelDocument, NormalizationDocument

logger = logging.getLogger(__name__)


def _mixture_doc(model: Union[GaussianParams, MixtureModel]) -> MixtureDocument:
    mix = as_mixture(model)
    return MixtureDocument(
        weights=mix.weights.tolist(),
        means=[c.mean.tolist() for c in mix.components],
        covariances=[c.cov.tolist() for c in mix.components],
        converged=mix.converged,
    )


def _mixture_from(doc: MixtureDocument) -> MixtureModel:
    components = tuple(
        GaussianParams(mean=np.array(mu), cov=np.array(cov))
        for mu, cov in zip(doc.means, doc.covariances)
    )
    return MixtureModel(weights=np.array(doc.weights), components=components, converged=doc.converged)


def engine_to_document(engine: FittedEngine) -> ModelDocument:
    """Build the persisted document for ``engine``."""
    norm = None
    if engine.normalization is not None:
        norm = NormalizationDocument(
            mins=engine.normalization.mins.tolist(),
            maxs=engine.normalization.maxs.tolist(),
        )
    if engine.is_classification:
        ccm: ClassConditionalModel = engine.model
        return ModelDocument(
            task="classification",
            engine=str(engine.choice),
            num_classes=ccm.num_classes,
            feature_names=list(engine.feature_names),
            class_names=list(engine.class_names) if engine.class_names else None,
            class_prior=ccm.class_prior.tolist(),
            mixtures=[_mixture_doc(m) for m in ccm.per_class],
            normalization=norm,
        )
    return ModelDocument(
        task="regression",
        engine=str(engine.choice),
        target_index=engine.target_index,
        feature_names=list(engine.feature_names),
        mixtures=[_mixture_doc(engine.model)],
        normalization=norm,
        target_normalized=norm is not None,
    )


def engine_from_document(doc: ModelDocument) -> FittedEngine:
    """Rebuild a FittedEngine from its document."""
    if doc.format_version != MODEL_FORMAT_VERSION:
        raise ConfigError(f"unsupported model format version {doc.format_version}")
    choice = parse_engine(doc.engine)
    norm = None
    if doc.normalization is not None:
        norm = MinMaxStats(mins=np.array(doc.normalization.mins), maxs=np.array(doc.normalization.maxs))

    if doc.task == "classification":
        model = ClassConditionalModel(
            class_prior=np.array(doc.class_prior),
            per_class=tuple(_mixture_from(m) for m in doc.mixtures),
        )
        task = Classification(num_classes=doc.num_classes)
    else:
        mix = _mixture_from(doc.mixtures[0])
        model = mix.components[0] if choice.kind == "gaussian" else mix
        task = Regression(target_index=doc.target_index)

    return FittedEngine(
        task=task,
        choice=choice,
        model=model,
        feature_names=tuple(doc.feature_names),
        class_names=tuple(doc.class_names) if doc.class_names else None,
        normalization=norm,
    )


def dumps_document(doc: ModelDocument) -> str:
    return json.dumps(doc.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"


def save_engine(engine: FittedEngine, path: Union[str, Path]) -> Path:
    """Write ``engine`` to ``path`` as sorted-key JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_document(engine_to_document(engine)), encoding="utf-8")
    logger.info(f"Engine saved: {path}")
    return path


def load_engine(path: Union[str, Path]) -> FittedEngine:
    """
    Read an engine written by ``save_engine``.

    Raises:
        MissingFile: If ``path`` does not exist
        DataError: If the document is malformed
    """
    path = Path(path)
    if not path.exists():
        raise MissingFile(str(path))
    try:
        doc = ModelDocument.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise DataError(f"invalid model file {path}: {e.errors()[0]['msg']}")
    logger.debug(f"Engine loaded: {path}")
    return engine_from_document(doc)
