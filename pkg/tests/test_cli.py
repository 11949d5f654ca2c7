"""End-to-end runs of the command-line front end, in process where possible."""

import json
import subprocess
import sys
import threading
import time
import urllib.request

import numpy as np
import pytest

from segrelax import pipeline
from segrelax.cli import main


@pytest.fixture(scope="module")
def scene_dir(tmp_path_factory):
    """A generated two-region scene with truth mask and seed points on disk."""
    d = tmp_path_factory.mktemp("scene")
    paths = {
        "image": str(d / "scene.png"),
        "truth": str(d / "truth.png"),
        "seeds": str(d / "seeds.json"),
        "dir": d,
    }
    rc = main(["synth", "--size", "48", "--seed", "7", "--out", paths["image"],
               "--truth-out", paths["truth"], "--seeds-out", paths["seeds"]])
    assert rc == 0
    return paths


@pytest.fixture(scope="module")
def flat_dir(tmp_path_factory):
    """A uniform 8x24 image that superpixelizes into a 3-node unit chain."""
    d = tmp_path_factory.mktemp("flat")
    image = str(d / "flat.png")
    pipeline.save_image(image, np.full((8, 24, 3), 0.5))
    seeds = str(d / "seeds.json")
    with open(seeds, "w", encoding="utf-8") as fh:
        json.dump({"v": 1, "foreground": [[4, 4]], "background": [[20, 4]]}, fh)
    overlay = np.zeros((8, 24, 4), dtype=np.uint8)
    overlay[4, 4] = (255, 0, 0, 255)     # red scribble -> foreground
    overlay[4, 20] = (0, 0, 255, 255)    # blue scribble -> background
    scribble = str(d / "scribble.png")
    pipeline.save_image(scribble, overlay)
    return {"image": image, "seeds": seeds, "scribble": scribble, "dir": d}


def test_synth_outputs(scene_dir):
    doc = json.load(open(scene_dir["seeds"], encoding="utf-8"))
    assert doc["v"] == 1
    assert doc["foreground"] and doc["background"]
    truth = pipeline.load_mask_png(scene_dir["truth"])
    assert truth.shape == (48, 48) and truth.any() and not truth.all()


def test_segment_recovers_truth(scene_dir, capsys):
    out = str(scene_dir["dir"] / "result.json")
    mask_out = str(scene_dir["dir"] / "mask.png")
    rc = main(["segment", "--image", scene_dir["image"], "--seeds",
               scene_dir["seeds"], "--method", "gc", "--superpixels", "180",
               "--out", out, "--mask-out", mask_out])
    assert rc == 0
    assert capsys.readouterr().out.startswith("gc:")
    doc = json.load(open(out, encoding="utf-8"))
    assert set(doc) == {"labels", "binary", "energy", "solver", "threshold"}
    assert doc["solver"] == "gc" and len(doc["labels"]) == 180
    assert set(doc["binary"]) <= {0, 1}
    mask = pipeline.load_mask_png(mask_out)
    truth = pipeline.load_mask_png(scene_dir["truth"])
    assert pipeline.overlap_ratio(mask, truth) >= 0.95


def test_qp_midpoint_lands_on_foreground(flat_dir, capsys):
    """On a symmetric unit chain the middle label is exactly 0.5 and the
    closed threshold rule assigns it to the foreground."""
    rc = main(["segment", "--image", flat_dir["image"], "--seeds",
               flat_dir["seeds"], "--method", "qp", "--superpixels", "3",
               "--threshold", "0.5", "--json"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["labels"] == [1.0, 0.5, 0.0]
    assert doc["binary"] == [1, 1, 0]


def test_scribble_overlay_seeds(flat_dir, capsys):
    rc = main(["segment", "--image", flat_dir["image"], "--seeds",
               flat_dir["scribble"], "--method", "qp", "--superpixels", "3",
               "--threshold", "0.5", "--json"])
    assert rc == 0
    assert json.loads(capsys.readouterr().out)["labels"] == [1.0, 0.5, 0.0]


def test_missing_image_exits_2(tmp_path, capsys):
    rc = main(["segment", "--image", str(tmp_path / "absent.png"),
               "--seeds", str(tmp_path / "absent.json")])
    assert rc == 2
    assert capsys.readouterr().err.startswith("error:")


def test_one_sided_seeds_exit_2(flat_dir, tmp_path, capsys):
    seeds = str(tmp_path / "fg_only.json")
    with open(seeds, "w", encoding="utf-8") as fh:
        json.dump({"v": 1, "foreground": [[4, 4]], "background": []}, fh)
    rc = main(["segment", "--image", flat_dir["image"], "--seeds", seeds,
               "--superpixels", "3"])
    assert rc == 2
    assert "seed" in capsys.readouterr().err


def test_unknown_method_rejected(flat_dir):
    with pytest.raises(SystemExit):
        main(["segment", "--image", flat_dir["image"], "--seeds",
              flat_dir["seeds"], "--method", "magic"])


def test_verify_passes(capsys):
    assert main(["verify"]) == 0
    out = capsys.readouterr().out
    assert "checks passed" in out and "FAIL" not in out
    assert main(["verify", "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["passed"] is True
    assert all(c["passed"] for c in doc["checks"])


def test_compare_all_methods(scene_dir, capsys):
    rc = main(["compare", "--image", scene_dir["image"], "--seeds",
               scene_dir["seeds"], "--truth", scene_dir["truth"],
               "--superpixels", "120", "--json"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert [r["method"] for r in doc["methods"]] == \
        ["compact_lp", "conv_lp", "qp", "gc"]
    for row in doc["methods"]:
        assert set(row["energy"]) == {"l1", "l2", "l1plus"}
        assert 0.0 <= row["gamma"] <= 1.0


def test_sweep_csv_and_json(scene_dir, capsys):
    out = str(scene_dir["dir"] / "sweep.csv")
    rc = main(["sweep", "--image", scene_dir["image"], "--seeds",
               scene_dir["seeds"], "--truth", scene_dir["truth"],
               "--superpixels", "120", "--methods", "qp,gc",
               "--grid-size", "20", "--out", out])
    assert rc == 0
    assert "mean gamma" in capsys.readouterr().out
    lines = open(out, encoding="utf-8").read().strip().split("\n")
    assert lines[0] == "threshold,method,gamma"
    assert len(lines) == 1 + 2 * 20
    rc = main(["sweep", "--image", scene_dir["image"], "--seeds",
               scene_dir["seeds"], "--truth", scene_dir["truth"],
               "--superpixels", "120", "--methods", "gc",
               "--grid-size", "10", "--json"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["thresholds"]) == 10
    assert len(doc["gamma"]["gc"]) == 10
    assert set(doc["mean"]) == set(doc["std"]) == {"gc"}


def test_bench_timing_csv(tmp_path, capsys):
    out = str(tmp_path / "bench.csv")
    rc = main(["bench", "--sides", "4", "--reps", "1", "--out", out])
    assert rc == 0
    lines = open(out, encoding="utf-8").read().strip().split("\n")
    assert lines[0] == "method,node_count,median_seconds"
    assert len(lines) == 5
    for line in lines[1:]:
        method, n, t = line.split(",")
        assert int(n) == 16 and float(t) > 0


def test_bench_quality_csv(tmp_path, capsys):
    out = str(tmp_path / "quality.csv")
    rc = main(["bench", "--quality", "--scenes", "1", "--seed", "3",
               "--out", out])
    assert rc == 0
    assert "compact_lp>=qp on" in capsys.readouterr().out
    lines = open(out, encoding="utf-8").read().strip().split("\n")
    assert lines[0] == "threshold,compact_lp,qp"
    assert len(lines) == 1 + 100


def test_serve_binds_ephemeral_port(flat_dir):
    """The serve command on port 0 prints the bound port and answers HTTP."""
    proc = subprocess.Popen(
        [sys.executable, "-c",
         "import sys; from segrelax.cli import main; "
         "sys.exit(main(['serve', '--port', '0']))"],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True,
    )
    try:
        banner = {}

        def read_banner():
            banner["line"] = proc.stdout.readline()

        t = threading.Thread(target=read_banner, daemon=True)
        t.start()
        t.join(timeout=30)
        assert banner.get("line", "").startswith("listening on http://127.0.0.1:"), \
            banner
        port = int(banner["line"].rsplit(":", 1)[1])
        png = open(flat_dir["image"], "rb").read()
        url = f"http://127.0.0.1:{port}/sessions?superpixels=3"
        doc = None
        for _ in range(40):
            try:
                req = urllib.request.Request(url, data=png, method="POST")
                with urllib.request.urlopen(req, timeout=10) as resp:
                    assert resp.status == 201
                    doc = json.loads(resp.read())
                break
            except (ConnectionError, urllib.error.URLError):
                time.sleep(0.25)
        assert doc is not None, "service never answered"
        assert doc["superpixels"] == 3
        assert (doc["width"], doc["height"]) == (24, 8)
    finally:
        proc.terminate()
        try:
            proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            proc.kill()
