"""Backbone registry and embedding-model behavior."""

import numpy as np
import pytest
import torch

from facedim_extractor.backbones import (
    SUPPORTED_BACKBONES,
    backbone_spec,
    load_backbone,
)
from facedim_extractor.errors import ConfigError, DependencyError


def test_ten_backbones_registered():
    assert len(SUPPORTED_BACKBONES) == 10
    for name in ("vgg16", "resnet50", "mobilenetv2", "densenet121",
                 "efficientnetb0", "vggface", "facenet", "facenet512",
                 "deepface", "deepid"):
        assert name in SUPPORTED_BACKBONES


def test_unknown_backbone_is_config_error():
    with pytest.raises(ConfigError, match="unknown backbone"):
        backbone_spec("alexnet")
    with pytest.raises(ConfigError):
        load_backbone("alexnet")


def test_name_normalization():
    assert backbone_spec("MobileNet-V2").name == "mobilenetv2"
    assert backbone_spec("EfficientNet_B0").name == "efficientnetb0"


def test_face_models_raise_dependency_error():
    for name in ("vggface", "facenet", "facenet512", "deepface", "deepid"):
        with pytest.raises(DependencyError):
            load_backbone(name, pretrained=False)


def test_layer_override_rejected_when_not_a_node():
    with pytest.raises(ConfigError, match="graph node"):
        load_backbone("mobilenetv2", embedding_layer="not.a.layer", pretrained=False)


def test_embedding_width_measured_not_hardcoded(mobilenet_random):
    # torchvision's mobilenet_v2 pools to 1280 features
    assert mobilenet_random.dim == 1280
    assert mobilenet_random.model_id == "mobilenetv2:flatten"


@pytest.mark.parametrize(
    "name,expected_dim",
    [("resnet50", 2048), ("densenet121", 1024), ("efficientnetb0", 1280)],
)
def test_other_backbone_widths(name, expected_dim):
    model = load_backbone(name, pretrained=False)
    assert model.dim == expected_dim


def test_vgg16_penultimate_width():
    model = load_backbone("vgg16", pretrained=False)
    assert model.dim == 4096
    assert model.model_id == "vgg16:classifier.4"


def test_random_init_is_seeded(mobilenet_random):
    again = load_backbone("mobilenetv2", pretrained=False)
    rng = np.random.default_rng(0)
    pixels = rng.uniform(0, 1, size=(40, 40, 3)).astype(np.float32)
    first = mobilenet_random.embed(mobilenet_random.preprocess(pixels))
    second = again.embed(again.preprocess(pixels))
    assert torch.equal(first, second)


def test_preprocess_shapes(mobilenet_random):
    rng = np.random.default_rng(1)
    pixels = rng.uniform(0, 1, size=(30, 50, 3)).astype(np.float32)
    batch = mobilenet_random.preprocess(pixels)
    assert batch.shape == (1, 3, 224, 224)


def test_embeddings_finite(mobilenet_random):
    rng = np.random.default_rng(2)
    pixels = rng.uniform(0, 1, size=(64, 64, 3)).astype(np.float32)
    out = mobilenet_random.embed(mobilenet_random.preprocess(pixels)).numpy()
    assert np.all(np.isfinite(out))
