"""Quick end-to-end check of the Python bindings.

Build and install first, e.g.:

    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/hsolo-*.whl
    python python/smoke_test.py
"""

import math
import os
import tempfile

import hsolo


def main():
    assert 3.6e6 <= hsolo.required_iterations(0.03, 4, 0.95) <= 3.8e6

    c = hsolo.Correspondence(100.0, 50.0, 2.0, 0.3, 140.0, 20.0, 3.0, 0.8)
    h = hsolo.single_match_homography(c)
    assert h.reprojection_error(c) < 1e-9
    e = h.entries
    assert math.isclose(math.hypot(e[0], e[3]), 1.5, rel_tol=1e-12)

    truth = hsolo.Homography([1.02, -0.13, 35.0, 0.12, 0.99, -12.0, 6e-5, -4e-5, 1.0])
    ident = truth.compose(truth.invert()).entries
    assert max(abs(a - b) for a, b in zip(ident, hsolo.Homography.identity().entries)) < 1e-12

    rows, mask = hsolo.generate_scene(500, 0.05, seed=3, pixel_noise=0.5, truth=truth)
    assert sum(mask) == 25
    result = hsolo.hsolo_estimate(rows, seed=1)
    found = sum(mask[i] for i in result.inliers)
    print(f"hsolo: support {result.support}, true inliers {found}/{sum(mask)}, "
          f"outer iterations {result.iterations}")
    assert found >= 20

    try:
        hsolo.ransac(rows, seed=1, max_iterations=200)
    except hsolo.NoModelFound:
        pass

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "scene.csv")
        hsolo.save_correspondences(path, rows, mask)
        back, back_mask = hsolo.load_correspondences(path)
        assert back == rows
        assert back_mask == mask

    table = hsolo.theory_curves([0.03, 0.5, 1.0])
    assert table[0]["speedup"] > 1000 and table[2]["speedup"] < 1
    print("smoke test passed")


if __name__ == "__main__":
    main()
