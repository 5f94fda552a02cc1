import numpy as np
import pytest
from PIL import Image

from ccamexport import ExportConfig, export_record

# One line per acceptance criterion, filled in by the acceptance tests and
# echoed after the run so the verdicts survive pytest's output capture.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("exporter acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def photo_path(tmp_path_factory):
    """Deterministic synthetic photo: a color ramp plus one bright blob."""
    rng = np.random.default_rng(99)
    h, w = 48, 40
    yy, xx = np.mgrid[0:h, 0:w]
    base = 0.25 + 0.5 * (xx / (w - 1))
    blob = np.exp(-(((yy - 14) / 6.0) ** 2 + ((xx - 27) / 5.0) ** 2))
    rgb = np.stack([
        np.clip(base + 0.9 * blob, 0.0, 1.0),
        np.clip(0.6 * base + 0.2 * blob, 0.0, 1.0),
        np.clip(0.9 - base, 0.0, 1.0),
    ], axis=2)
    noisy = np.clip(rgb + rng.normal(0.0, 0.02, rgb.shape), 0.0, 1.0)
    path = tmp_path_factory.mktemp("img") / "photo.png"
    Image.fromarray(np.round(noisy * 255.0).astype(np.uint8)).save(path)
    return path


@pytest.fixture(scope="session")
def exported(photo_path, tmp_path_factory):
    """One full tiny-model export, shared read-only across the suite."""
    out = tmp_path_factory.mktemp("rec") / "tiny_record"
    cfg = ExportConfig(model="tiny", layer="features.pool2",
                       image=str(photo_path), out_dir=str(out))
    return cfg, export_record(cfg)
