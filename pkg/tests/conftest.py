import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # geom / oracles helpers

from plaquemesh.phantom import BumpSpec, CURVED, PhantomSpec, generate_phantom
from plaquemesh.plaque import extract_plaque


def acceptance_bump_spec(voxel_size: float) -> PhantomSpec:
    """The reference stenotic phantom: closed curved tube with one bump."""
    return PhantomSpec(
        kind=CURVED,
        lumen_radius=5.0,
        wall_thickness=1.0,
        voxel_size=voxel_size,
        length=72.0,
        bump=BumpSpec(
            center_axial=36.0,
            center_angular=0.0,
            amplitude=2.0,
            sigma_axial=5.0,
            sigma_angular=0.55,
        ),
    )


@pytest.fixture(scope="session")
def bump_phantom_03():
    spec = acceptance_bump_spec(0.3)
    volume, truth = generate_phantom(spec)
    return volume, truth


@pytest.fixture(scope="session")
def bump_phantom_06():
    spec = acceptance_bump_spec(0.6)
    volume, truth = generate_phantom(spec)
    return volume, truth


@pytest.fixture(scope="session")
def bump_extraction_03(bump_phantom_03):
    volume, truth = bump_phantom_03
    return extract_plaque(volume), truth


@pytest.fixture(scope="session")
def bump_extraction_06(bump_phantom_06):
    volume, truth = bump_phantom_06
    return extract_plaque(volume), truth


@pytest.fixture()
def rng():
    return np.random.default_rng(20240811)
