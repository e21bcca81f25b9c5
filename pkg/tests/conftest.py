import numpy as np
import pytest

from reefsurvey.sensor import CameraModel
from reefsurvey.world import RobotPose, WorldMap


def flat_world(width=40.0, height=40.0, cell=0.25, ooi_rects=(),
               blocks=(), spawn=None, ooi_kind="oyster") -> WorldMap:
    """Small hand-built world: optional OOI rectangles and obstacle blocks.

    Rectangles are (x0, y0, x1, y1) in meters; blocks are
    (x0, y0, x1, y1, height).
    """
    nx = int(np.ceil(width / cell))
    ny = int(np.ceil(height / cell))
    height_grid = np.zeros((ny, nx), dtype=np.float32)
    ooi = np.zeros((ny, nx), dtype=bool)

    def sl(lo, hi, n):
        return slice(max(0, int(np.floor(lo / cell))),
                     min(n, int(np.ceil(hi / cell))))

    for x0, y0, x1, y1 in ooi_rects:
        ooi[sl(y0, y1, ny), sl(x0, x1, nx)] = True
    for x0, y0, x1, y1, h in blocks:
        height_grid[sl(y0, y1, ny), sl(x0, x1, nx)] = h
        ooi[sl(y0, y1, ny), sl(x0, x1, nx)] = False
    return WorldMap(width_m=width, height_m=height, cell_size=cell,
                    height_grid=height_grid, ooi_grid=ooi, ooi_kind=ooi_kind,
                    spawn_pose=spawn or RobotPose(width / 2, height / 2, 6.0))


@pytest.fixture
def small_cam():
    return CameraModel(image_w=64, image_h=64)


@pytest.fixture
def empty_world():
    return flat_world()


def pytest_addoption(parser):
    parser.addoption("--skip-slow", action="store_true", default=False,
                     help="skip the long-running acceptance criteria")


def pytest_collection_modifyitems(config, items):
    if not config.getoption("--skip-slow"):
        return
    marker = pytest.mark.skip(reason="--skip-slow given")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(marker)


_ACCEPTANCE_RESULTS = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if "test_acceptance" not in item.nodeid:
        return
    import re
    match = re.search(r"test_(a\d+)", item.name)
    if not match:
        return
    key = match.group(1).upper()
    if report.when == "call":
        _ACCEPTANCE_RESULTS[key] = ("PASS" if report.passed else "FAIL",
                                    item.name)
    elif report.when == "setup" and report.skipped:
        _ACCEPTANCE_RESULTS[key] = ("SKIP", item.name)
    elif report.when == "setup" and report.failed:
        _ACCEPTANCE_RESULTS[key] = ("FAIL", item.name)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for key in sorted(_ACCEPTANCE_RESULTS, key=lambda k: int(k[1:])):
        status, name = _ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"[{key}] {status}  {name}")
