import importlib.resources as ir

import numpy as np
import pytest

from aquafuse.geometry import (
    CameraIntrinsics,
    DistortionParams,
    StereoCalibration,
    load_calibration,
)

DATA = ir.files("aquafuse") / "data"


def scene_path(name: str) -> str:
    return str(DATA / "scenes" / f"{name}.json")


@pytest.fixture(scope="session")
def pool_calibration() -> StereoCalibration:
    """The in-water calibration shipped with the package."""
    return load_calibration(str(DATA / "calibration_pool.json"))


@pytest.fixture(scope="session")
def identity_calibration() -> StereoCalibration:
    return StereoCalibration.create(
        CameraIntrinsics(1000.0, 1000.0, 640.0, 480.0),
        CameraIntrinsics(1000.0, 1000.0, 640.0, 480.0),
        DistortionParams(),
        DistortionParams(),
        np.eye(3),
        np.array([-0.06, 0.0, 0.0]),
    )


TABLE_LEFT_DIST = DistortionParams(k1=0.292, k2=0.998, k3=-1.74, p1=0.0033, p2=-0.00264)
