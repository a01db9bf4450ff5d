"""Local editing service behind the composition editor.

HTTP + JSON on loopback, stdlib only. Mutations are applied strictly
serially under a lock and atomically: a PATCH either yields a valid scene
(and is acknowledged with the new document) or is rejected with the violated
invariant named, leaving the scene untouched. Renders are cached by the
canonical document hash, so GET /render always reflects the last accepted
state.

Endpoints:
    GET   /scene                     current canonical document
    PATCH /scene/component/{id}      center / scale / z_order / source
    GET   /render                    current PNG
    GET   /catalog                   ear and body listing
    POST  /export                    write PNG + scene to disk
"""

from __future__ import annotations

import hashlib
import io
import json
import threading
from dataclasses import replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import MangaFaceError, ParseError
from .synthesis.catalog import ComponentCatalog, load_catalog
from .synthesis.compose import SceneResources, render
from .synthesis.scene import CompositionScene, check_scene, parse_scene, serialize_scene


class EditorService:
    """Owns the scene state; handlers delegate here."""

    def __init__(self, scene_path, catalog_dir=None, catalog: ComponentCatalog | None = None):
        self.scene_path = Path(scene_path)
        self.base_dir = self.scene_path.parent
        if catalog is None:
            catalog = load_catalog(catalog_dir if catalog_dir else self.base_dir / "catalog")
        self.resources = SceneResources(base_dir=self.base_dir, catalog=catalog)
        self.scene: CompositionScene = parse_scene(self.scene_path.read_text())
        self.lock = threading.Lock()
        self._render_cache: tuple[str, bytes] | None = None

    # --- reads ---

    def scene_document(self) -> bytes:
        with self.lock:
            return serialize_scene(self.scene).encode()

    def render_png(self) -> bytes:
        with self.lock:
            doc = serialize_scene(self.scene)
            key = hashlib.sha256(doc.encode()).hexdigest()
            if self._render_cache and self._render_cache[0] == key:
                return self._render_cache[1]
            img = render(self.scene, self.resources)
            buf = io.BytesIO()
            arr = np.clip(np.rint(img.pixels), 0, 255).astype(np.uint8)
            Image.fromarray(arr, mode="L").save(buf, format="PNG")
            self._render_cache = (key, buf.getvalue())
            return self._render_cache[1]

    def catalog_listing(self) -> dict:
        return self.resources.catalog.listing()

    # --- mutations ---

    MUTABLE = ("center", "scale", "z_order", "source")

    def patch_component(self, component_id: str, mutation: dict) -> tuple[int, str | dict]:
        """Apply a mutation atomically. Returns (status, body); a successful
        body is the new canonical document text, so acknowledgments are
        byte-identical to a subsequent GET /scene."""
        with self.lock:
            comp = self.scene.component(component_id)
            if comp is None:
                return 404, {"error": f"unknown component {component_id!r}"}
            unknown = [k for k in mutation if k not in self.MUTABLE]
            if unknown:
                return 400, {"error": f"unknown mutation fields {unknown}"}
            if not mutation:
                return 400, {"error": "empty mutation"}
            try:
                if "center" in mutation:
                    cx, cy = mutation["center"]
                    comp = replace(comp, center=(float(cx), float(cy)))
                if "scale" in mutation:
                    comp = replace(comp, scale=float(mutation["scale"]))
                if "z_order" in mutation:
                    comp = replace(comp, z_order=int(mutation["z_order"]))
                if "source" in mutation:
                    comp = replace(comp, source=dict(mutation["source"]))
                candidate = self.scene.with_component(comp)
                check_scene(candidate, complete=True)
                if comp.source.get("kind") == "catalog":
                    self.resources.catalog.get(comp.source["category"], comp.source["index"])
                elif comp.source.get("kind") == "generated":
                    path = self.base_dir / comp.source["path"]
                    if not path.exists():
                        raise ParseError(f"generated image not found: {comp.source['path']}")
            except (MangaFaceError, ValueError, TypeError) as e:
                return 400, {"error": str(e)}
            self.scene = candidate
            return 200, serialize_scene(candidate)

    def export(self, params: dict) -> tuple[int, dict]:
        with self.lock:
            scene_path = Path(params.get("scene_path") or self.base_dir / "export_scene.json")
            png_path = Path(params.get("png_path") or self.base_dir / "export_manga.png")
            doc = serialize_scene(self.scene)
        png = self.render_png()
        scene_path.parent.mkdir(parents=True, exist_ok=True)
        png_path.parent.mkdir(parents=True, exist_ok=True)
        scene_path.write_text(doc)
        png_path.write_bytes(png)
        return 200, {"scene_path": str(scene_path), "png_path": str(png_path)}


def make_handler(service: EditorService):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):
            pass

        def _send(self, status: int, body: bytes, content_type: str) -> None:
            self.send_response(status)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _send_json(self, status: int, obj: dict) -> None:
            self._send(status, (json.dumps(obj, sort_keys=True) + "\n").encode(),
                       "application/json")

        def _body(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length) if length else b"{}"
            try:
                return json.loads(raw or b"{}")
            except json.JSONDecodeError:
                return {}

        def do_GET(self):
            if self.path == "/scene":
                self._send(200, service.scene_document(), "application/json")
            elif self.path == "/render":
                self._send(200, service.render_png(), "image/png")
            elif self.path == "/catalog":
                self._send_json(200, service.catalog_listing())
            else:
                self._send_json(404, {"error": f"unknown path {self.path}"})

        def do_PATCH(self):
            prefix = "/scene/component/"
            if not self.path.startswith(prefix):
                self._send_json(404, {"error": f"unknown path {self.path}"})
                return
            component_id = self.path[len(prefix):]
            status, body = service.patch_component(component_id, self._body())
            if isinstance(body, str):
                self._send(status, body.encode(), "application/json")
            else:
                self._send_json(status, body)

        def do_POST(self):
            if self.path == "/export":
                status, body = service.export(self._body())
                self._send_json(status, body)
            else:
                self._send_json(404, {"error": f"unknown path {self.path}"})

    return Handler


def make_server(scene_path, port: int = 0, host: str = "127.0.0.1",
                catalog_dir=None) -> tuple[ThreadingHTTPServer, EditorService]:
    """Bound (not yet serving) HTTP server; port 0 picks a free port."""
    service = EditorService(scene_path, catalog_dir=catalog_dir)
    server = ThreadingHTTPServer((host, port), make_handler(service))
    return server, service


def serve_forever(scene_path, port: int = 8737, host: str = "127.0.0.1",
                  catalog_dir=None) -> None:
    server, _ = make_server(scene_path, port, host, catalog_dir)
    print(f"editing service on http://{host}:{server.server_address[1]}  "
          f"(scene: {scene_path})", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
