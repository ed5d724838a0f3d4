import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest
import torch
from PIL import Image

from facedim_extractor.backbones import backbone_spec, load_backbone

torch.set_num_threads(2)


@pytest.fixture(scope="session")
def mobilenet_random():
    """One seeded random-init backbone shared by the whole session."""
    return load_backbone("mobilenetv2", pretrained=False)


@pytest.fixture
def image_dir(tmp_path):
    """Two identities, one image each (the 2-image contract fixture)."""
    rng = np.random.default_rng(7)
    for identity in ("cow-a", "cow-b"):
        directory = tmp_path / "images" / identity
        directory.mkdir(parents=True)
        arr = rng.integers(0, 256, size=(48, 64, 3), dtype=np.uint8)
        Image.fromarray(arr, "RGB").save(directory / "shot.png", format="PNG")
    return tmp_path / "images"


class _ScriptedDetector:
    def __init__(self):
        self.responses: list[bytes] = []
        self.requests: list[bytes] = []
        self._server = None
        self._thread = None

    def enqueue_boxes(self, boxes):
        self.responses.append(json.dumps(boxes).encode())

    @property
    def url(self):
        host, port = self._server.server_address
        return f"http://{host}:{port}/detect"

    def start(self):
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                body = self.rfile.read(int(self.headers.get("Content-Length", 0)))
                outer.requests.append(body)
                payload = outer.responses.pop(0) if outer.responses else b"[]"
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args):
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self):
        self._server.shutdown()
        self._server.server_close()
        self._thread.join()


@pytest.fixture
def mock_detector():
    server = _ScriptedDetector().start()
    yield server
    server.stop()
