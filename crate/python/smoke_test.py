"""Smoke test for the `roadfuse` extension module.

Build and install first, e.g. `maturin develop -m crates/python/Cargo.toml`,
then run `python python/smoke_test.py` (or under pytest).
"""

import json
import math

import roadfuse


def test_pixel_round_trip():
    uv = roadfuse.project_to_pixel(820.0, 1.5)
    assert uv is not None
    x, y = roadfuse.localize_pixel(*uv)
    assert math.isclose(x, 820.0, abs_tol=1e-6)
    assert math.isclose(y, 1.5, abs_tol=1e-6)
    # Behind the camera.
    assert roadfuse.project_to_pixel(700.0, 0.0) is None


def test_custom_camera_json():
    cam = json.dumps({"position": {"x": 0.0, "y": 0.0, "z": 10.0}, "tilt": 20.0})
    uv = roadfuse.project_to_pixel(30.0, 0.0, cam)
    x, y = roadfuse.localize_pixel(*uv, cam)
    assert math.isclose(x, 30.0, abs_tol=1e-6) and abs(y) < 1e-6


def test_dbscan_two_blobs():
    pts = [(0.1 * i, 0.0, 0.0) for i in range(10)] + [(50.0 + 0.1 * i, 0.0, 0.0) for i in range(10)]
    pts.append((25.0, 25.0, 0.0))
    labels = roadfuse.dbscan(pts, 0.5, 3)
    assert labels[-1] == -1
    assert len(set(labels[:10])) == 1 and len(set(labels[10:20])) == 1
    assert labels[0] != labels[10]


def test_fuse_lidar_only_and_both():
    cam = [(0.1 * k, 800.0 + 2.4 * k, 1.0) for k in range(50)]
    lid = [(0.1 * k, 800.0 + 2.4 * k, 1.0) for k in range(0, 50, 2)]
    fused = roadfuse.fuse(cam, lid)
    assert len(fused) == len(cam)
    t, x, y = fused[-1]
    assert math.isclose(t, 4.9) and abs(x - (800.0 + 2.4 * 49)) < 1.0 and abs(y - 1.0) < 0.5
    assert len(roadfuse.fuse([], lid)) >= len(lid)


def test_simulated_truth():
    truth = roadfuse.simulate_truth(json.dumps({"duration": 5.0, "traffic": {"count": 3}}))
    assert 1 <= len(truth) <= 3
    for samples in truth.values():
        ts = [s[0] for s in samples]
        assert ts == sorted(ts)


def test_bad_config_raises():
    try:
        roadfuse.simulate_truth('{"duration": -1}')
    except ValueError:
        pass
    else:
        raise AssertionError("negative duration accepted")


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for t in tests:
        t()
        print(f"ok  {t.__name__}")
    print(f"roadfuse {roadfuse.__version__}: {len(tests)} checks passed")
