import http.client
import json
import threading
from pathlib import Path

import numpy as np
import pytest

from mangaface.cli import main
from mangaface.service import make_server
from mangaface.synthesis import load_catalog, parse_scene


# --- command line -----------------------------------------------------------------

def test_cli_ingest_with_demo_tree(tmp_path, capsys):
    root = tmp_path / "demo"
    code = main(["ingest", str(root), "--make-demo", "2",
                 "--dataset-resolution", "64", "--region-resolution", "64"])
    assert code == 0
    out = capsys.readouterr().out
    assert "'face': 2" in out
    assert (root / ".cache" / "manifest.json").exists()


def test_cli_translate_and_rerun_byte_identical(fixture_env, tmp_path, capsys):
    args = ["translate", "--photo", str(fixture_env["photo"]),
            "--checkpoints", str(fixture_env["ckpt"]),
            "--out", str(tmp_path / "run1"),
            "--catalog", str(fixture_env["catalog"]),
            "--region-resolution", "64", "--nose-resolution", "64",
            "--dataset-resolution", "64"]
    assert main(args) == 0
    args2 = list(args)
    args2[args.index("--out") + 1] = str(tmp_path / "run2")
    assert main(args2) == 0
    doc1 = (tmp_path / "run1" / "scene.json").read_bytes()
    doc2 = (tmp_path / "run2" / "scene.json").read_bytes()
    assert doc1 == doc2
    out_dir = tmp_path / "run1"
    assert (out_dir / "manga.png").exists()
    assert (out_dir / "geometry.json").exists()
    assert parse_scene((out_dir / "scene.json").read_text())
    assert sorted(p.name for p in (out_dir / "regions").glob("*.png")) == [
        "eyeleft.png", "eyeright.png", "hair.png", "mouth.png", "nose.png"]
    assert len(list((out_dir / "crops").glob("*.png"))) == 4


def test_cli_translate_missing_checkpoint_names_stage(fixture_env, tmp_path, capsys):
    code = main(["translate", "--photo", str(fixture_env["photo"]),
                 "--checkpoints", str(tmp_path / "empty"),
                 "--out", str(tmp_path / "out"),
                 "--catalog", str(fixture_env["catalog"]),
                 "--region-resolution", "64", "--nose-resolution", "64"])
    assert code != 0
    err = capsys.readouterr().err
    assert "stage encode" in err and "nose" in err


def test_cli_synthesize_re_renders_scene(fixture_scene, tmp_path, capsys):
    out_png = tmp_path / "again.png"
    code = main(["synthesize", "--scene", str(fixture_scene["scene_path"]),
                 "--out", str(out_png), "--catalog", str(fixture_scene["catalog"])])
    assert code == 0
    original = (fixture_scene["out"] / "manga.png").read_bytes()
    assert out_png.read_bytes() == original


def test_cli_rejects_malformed_dataset(tmp_path, capsys):
    root = tmp_path / "broken"
    (root / "photos" / "eye").mkdir(parents=True)
    (root / "photos" / "eye" / "bad.png").write_bytes(b"not a png")
    assert main(["ingest", str(root)]) == 1
    assert "bad.png" in capsys.readouterr().err


# --- editing service ---------------------------------------------------------------

@pytest.fixture()
def service_conn(fixture_scene):
    server, service = make_server(fixture_scene["scene_path"], port=0,
                                  catalog_dir=fixture_scene["catalog"])
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    port = server.server_address[1]
    conn = http.client.HTTPConnection("127.0.0.1", port, timeout=10)
    yield conn, service
    conn.close()
    server.shutdown()
    thread.join(timeout=5)


def _request(conn, method, path, body=None):
    payload = json.dumps(body).encode() if body is not None else None
    headers = {"Content-Type": "application/json"} if payload else {}
    conn.request(method, path, body=payload, headers=headers)
    resp = conn.getresponse()
    data = resp.read()
    return resp.status, resp.getheader("Content-Type"), data


def test_scene_endpoint_serves_loaded_document(service_conn, fixture_scene):
    conn, _ = service_conn
    status, ctype, data = _request(conn, "GET", "/scene")
    assert status == 200 and ctype == "application/json"
    assert data == fixture_scene["scene_path"].read_bytes()


def test_render_endpoint_serves_png(service_conn):
    conn, _ = service_conn
    status, ctype, data = _request(conn, "GET", "/render")
    assert status == 200 and ctype == "image/png"
    assert data.startswith(b"\x89PNG")


def test_catalog_endpoint(service_conn):
    conn, _ = service_conn
    status, _, data = _request(conn, "GET", "/catalog")
    listing = json.loads(data)
    assert len(listing["ears"]) == 10
    assert [b["tag"] for b in listing["bodies"]].count("female") == 3


def test_patch_invalid_scale_rejected_with_invariant(service_conn):
    conn, service = service_conn
    before = service.scene_document()
    status, _, data = _request(conn, "PATCH", "/scene/component/nose", {"scale": -1.0})
    assert status == 400
    assert "scale > 0" in json.loads(data)["error"]
    assert service.scene_document() == before  # mutation fully rejected


def test_patch_unknown_component_404(service_conn):
    conn, _ = service_conn
    status, _, data = _request(conn, "PATCH", "/scene/component/wig", {"scale": 2.0})
    assert status == 404


def test_patch_center_moves_render(service_conn, fixture_scene):
    conn, service = service_conn
    _, _, before_png = _request(conn, "GET", "/render")
    scene = parse_scene(service.scene_document().decode())
    nose = scene.component("nose")
    status, _, data = _request(conn, "PATCH", "/scene/component/nose",
                               {"center": [nose.center[0] + 30.0, nose.center[1]]})
    assert status == 200
    acked = json.loads(data)
    moved = next(c for c in acked["components"] if c["id"] == "nose")
    assert moved["center"][0] == pytest.approx(nose.center[0] + 30.0)
    _, _, after_png = _request(conn, "GET", "/render")
    assert after_png != before_png
    # direct render of the mutated scene matches the service pixel-for-pixel
    from mangaface.synthesis import SceneResources, render
    import io
    from PIL import Image

    mutated = parse_scene(service.scene_document().decode())
    direct = render(mutated, SceneResources(fixture_scene["out"],
                                            load_catalog(fixture_scene["catalog"])))
    served = np.asarray(Image.open(io.BytesIO(after_png)), dtype=np.float32)
    assert np.array_equal(served, direct.pixels)


def test_patch_source_switch_changes_render(service_conn):
    conn, _ = service_conn
    _, _, before_png = _request(conn, "GET", "/render")
    status, _, _ = _request(conn, "PATCH", "/scene/component/body",
                            {"source": {"kind": "catalog", "category": "bodies", "index": 5}})
    assert status == 200
    _, _, after_png = _request(conn, "GET", "/render")
    assert after_png != before_png
    status, _, data = _request(conn, "PATCH", "/scene/component/body",
                               {"source": {"kind": "catalog", "category": "bodies", "index": 99}})
    assert status == 400


def test_export_writes_scene_and_png(service_conn, tmp_path):
    conn, service = service_conn
    status, _, data = _request(conn, "POST", "/export",
                               {"scene_path": str(tmp_path / "exp.json"),
                                "png_path": str(tmp_path / "exp.png")})
    assert status == 200
    paths = json.loads(data)
    assert Path(paths["scene_path"]).read_bytes() == service.scene_document()
    assert Path(paths["png_path"]).read_bytes() == service.render_png()


def test_mutations_are_serial_and_atomic(service_conn):
    conn, service = service_conn
    scene0 = parse_scene(service.scene_document().decode())
    mouth = scene0.component("mouth")
    results = []

    def worker(dx):
        c = http.client.HTTPConnection("127.0.0.1", conn.port, timeout=10)
        status, _, _ = _request(c, "PATCH", "/scene/component/mouth",
                                {"center": [mouth.center[0] + dx, mouth.center[1]]})
        results.append(status)
        c.close()

    threads = [threading.Thread(target=worker, args=(dx,)) for dx in (5.0, 10.0, 15.0)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert results == [200, 200, 200]
    final = parse_scene(service.scene_document().decode())
    assert final.component("mouth").center[0] - mouth.center[0] in (5.0, 10.0, 15.0)
