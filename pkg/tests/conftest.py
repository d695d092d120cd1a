import pytest

from tbsasim.drive import DriveMode, DriveSpec
from tbsasim.harness import ExperimentConfig
from tbsasim.model import ReactorSpec, SeedSpec


@pytest.fixture
def tiny_config():
    """A seconds-long experiment small enough for unit tests."""

    def make(**overrides) -> ExperimentConfig:
        kwargs = dict(
            reactor=ReactorSpec(radius=0.15),
            seed=SeedSpec(bounding_size=2, arm_width=2),
            free_tiles=4,
            drive=DriveSpec(
                mode=DriveMode.UNICYCLE,
                force_mag=0.06,
                torque_mag=4.5e-4,
                frequency=1.0,
            ),
            duration=0.5,
            snapshot_period=0.25,
            rng_seed=7,
        )
        kwargs.update(overrides)
        return ExperimentConfig(**kwargs)

    return make
