"""Backbone CNNs and the embedding layers read from them.

Ten backbone names are recognized. The five ImageNet models are built from
torchvision, truncated at a named graph node (defaulting to the last
representation before the classification head), and the embedding width is
always read from a real forward pass, never hardcoded. The five face models
(vggface, facenet, facenet512, deepface, deepid) have no torchvision
checkpoints; constructing them raises DependencyError until a local weights
source is wired in.

Weight policy: ``pretrained=True`` (the default) loads the published
torchvision ImageNet checkpoints and raises DependencyError when they cannot
be fetched or found in the local cache. ``pretrained=False`` builds the
architecture with a fixed seed, which is enough for format/contract testing
and is deterministic across runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torchvision import models
from torchvision.models.feature_extraction import create_feature_extractor

from .errors import ConfigError, DependencyError

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

#: Seed used for deterministic random initialization when pretrained=False.
RANDOM_INIT_SEED = 0


@dataclass(frozen=True)
class BackboneSpec:
    """One supported backbone: its builder, embedding node, and preprocessing."""

    name: str
    embedding_layer: str
    input_size: tuple[int, int]
    preprocessing: str  # "imagenet-standard" | "facelib-standard"


_TORCHVISION_BUILDERS = {
    "vgg16": (models.vgg16, "VGG16_Weights"),
    "resnet50": (models.resnet50, "ResNet50_Weights"),
    "mobilenetv2": (models.mobilenet_v2, "MobileNet_V2_Weights"),
    "densenet121": (models.densenet121, "DenseNet121_Weights"),
    "efficientnetb0": (models.efficientnet_b0, "EfficientNet_B0_Weights"),
}

# Default embedding node per backbone: the last pre-classification
# representation in torchvision's FX graph naming.
_SPECS = {
    "vgg16": BackboneSpec("vgg16", "classifier.4", (224, 224), "imagenet-standard"),
    "resnet50": BackboneSpec("resnet50", "flatten", (224, 224), "imagenet-standard"),
    "mobilenetv2": BackboneSpec("mobilenetv2", "flatten", (224, 224), "imagenet-standard"),
    "densenet121": BackboneSpec("densenet121", "flatten", (224, 224), "imagenet-standard"),
    "efficientnetb0": BackboneSpec("efficientnetb0", "flatten", (224, 224), "imagenet-standard"),
    "vggface": BackboneSpec("vggface", "fc7", (224, 224), "facelib-standard"),
    "facenet": BackboneSpec("facenet", "embeddings", (160, 160), "facelib-standard"),
    "facenet512": BackboneSpec("facenet512", "embeddings", (160, 160), "facelib-standard"),
    "deepface": BackboneSpec("deepface", "fc7", (152, 152), "facelib-standard"),
    "deepid": BackboneSpec("deepid", "fc1", (55, 47), "facelib-standard"),
}

SUPPORTED_BACKBONES = tuple(sorted(_SPECS))


def backbone_spec(name: str, embedding_layer: str | None = None) -> BackboneSpec:
    """Spec for a supported backbone, optionally overriding the embedding node.

    Raises:
        ConfigError: the name is not one of the ten supported backbones.
    """
    key = name.lower().replace("-", "").replace("_", "")
    if key not in _SPECS:
        raise ConfigError(
            f"unknown backbone {name!r}; supported: {', '.join(SUPPORTED_BACKBONES)}"
        )
    spec = _SPECS[key]
    if embedding_layer is not None:
        spec = BackboneSpec(spec.name, embedding_layer, spec.input_size, spec.preprocessing)
    return spec


class EmbeddingModel:
    """A backbone truncated at its embedding node.

    Attributes:
        spec: the resolved BackboneSpec.
        model_id: ``"<name>:<layer>"``, stamped into FEDM1 headers.
        dim: embedding width, measured from a forward pass.
    """

    def __init__(self, spec: BackboneSpec, extractor: torch.nn.Module) -> None:
        self.spec = spec
        self.model_id = f"{spec.name}:{spec.embedding_layer}"
        self._extractor = extractor.eval()
        with torch.no_grad():
            h, w = spec.input_size
            probe = torch.zeros(1, 3, h, w)
            self.dim = int(self._embed_tensor(probe).shape[1])

    def _embed_tensor(self, batch: torch.Tensor) -> torch.Tensor:
        out = self._extractor(batch)[self.spec.embedding_layer]
        return torch.flatten(out, start_dim=1)

    def embed(self, batch: torch.Tensor) -> torch.Tensor:
        """Embeddings for a preprocessed (n, 3, h, w) batch, shape (n, dim)."""
        with torch.no_grad():
            return self._embed_tensor(batch)

    def preprocess(self, pixels) -> torch.Tensor:
        """(h, w, 3) float array in [0, 1] to a normalized (1, 3, h, w) tensor."""
        tensor = torch.as_tensor(pixels, dtype=torch.float32).permute(2, 0, 1)[None]
        tensor = torch.nn.functional.interpolate(
            tensor, size=self.spec.input_size, mode="bilinear", align_corners=False
        )
        if self.spec.preprocessing == "imagenet-standard":
            mean = torch.tensor(IMAGENET_MEAN).view(1, 3, 1, 1)
            std = torch.tensor(IMAGENET_STD).view(1, 3, 1, 1)
            return (tensor - mean) / std
        return tensor * 2.0 - 1.0  # facelib-standard: [-1, 1]


def load_backbone(
    name: str,
    embedding_layer: str | None = None,
    pretrained: bool = True,
) -> EmbeddingModel:
    """Build an EmbeddingModel for one of the supported backbones.

    Raises:
        ConfigError: unknown backbone name or unknown embedding node.
        DependencyError: weights (or the architecture) cannot be obtained.
    """
    spec = backbone_spec(name, embedding_layer)
    if spec.name not in _TORCHVISION_BUILDERS:
        raise DependencyError(
            f"backbone {spec.name!r} has no public torchvision checkpoint; "
            "provide weights locally or use one of: "
            + ", ".join(sorted(_TORCHVISION_BUILDERS))
        )
    builder, weights_enum_name = _TORCHVISION_BUILDERS[spec.name]
    if pretrained:
        weights = getattr(models, weights_enum_name).DEFAULT
        try:
            network = builder(weights=weights)
        except Exception as exc:  # noqa: BLE001 - hub raises various URL errors
            raise DependencyError(
                f"could not obtain pretrained weights for {spec.name!r}: {exc}"
            ) from exc
    else:
        torch.manual_seed(RANDOM_INIT_SEED)
        network = builder(weights=None)
    try:
        extractor = create_feature_extractor(
            network.eval(), return_nodes=[spec.embedding_layer]
        )
    except ValueError as exc:
        raise ConfigError(
            f"{spec.embedding_layer!r} is not a graph node of {spec.name}: {exc}"
        ) from exc
    return EmbeddingModel(spec, extractor)
