import pytest

from uis import AtomPrior, SignalVector

from synthetic import smooth_atom_images


@pytest.fixture(scope="session")
def image_atoms_64():
    return smooth_atom_images(12, 64, seed=2024)


@pytest.fixture(scope="session")
def image_prior_64(image_atoms_64):
    return AtomPrior(image_atoms_64)


@pytest.fixture(scope="session")
def image_signal_64(image_atoms_64):
    return SignalVector(image_atoms_64[3], (64, 64, 1))
