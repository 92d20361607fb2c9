import numpy as np
import pytest

from radialgdp.circle_kernel import CircleGrid
from radialgdp.surface import DiskSurface
from radialgdp.validators import (
    DatasetValidationError,
    DatasetValidator,
    WorkdirValidationError,
    WorkdirValidator,
)


def test_workdir_validator_existing_dir(tmp_path):
    """Tests that a writable directory is returned and left without temporary files."""
    validated = WorkdirValidator(tmp_path).validate()
    assert validated == tmp_path
    assert list(tmp_path.iterdir()) == []


def test_workdir_validator_creates_missing_dir(tmp_path):
    target = tmp_path / "a" / "b"
    assert WorkdirValidator(target).validate() == target
    assert target.is_dir()


def test_workdir_validator_treats_dotted_names_as_dirs(tmp_path):
    target = tmp_path / "run.v2"
    WorkdirValidator(target).validate()
    assert target.is_dir()


def test_workdir_validator_falls_back(tmp_path):
    """Tests that a candidate below a regular file is skipped for the next one."""
    blocker = tmp_path / "file"
    blocker.write_text("x")
    fallback = tmp_path / "fallback"
    validated = WorkdirValidator([blocker / "run", fallback]).validate()
    assert validated == fallback


def test_workdir_validator_no_writable_dir(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(WorkdirValidationError) as excinfo:
        WorkdirValidator(blocker / "run").validate()
    assert excinfo.value.errno is not None
    assert excinfo.value.exit_code == 2
    assert "is writable" in str(excinfo.value)


def test_workdir_validator_rejects_bad_path_type():
    with pytest.raises(ValueError):
        WorkdirValidator(42)


def surface(radii, m):
    radii = np.asarray(radii, dtype=float)
    return DiskSurface(radii, CircleGrid(m), np.zeros((len(radii), m, 3)))


def test_dataset_validator_accepts_registered_dataset():
    dataset = [surface([0.5, 1.0], 4), surface([0.5, 1.0], 4)]
    assert DatasetValidator(dataset, min_size=2).validate() is dataset


@pytest.mark.parametrize(
    "dataset",
    [
        [],
        [surface([0.5, 1.0], 4), surface([0.5, 1.0], 5)],
        [surface([0.5, 1.0], 4), surface([0.6, 1.0], 4)],
    ],
)
def test_dataset_validator_rejects(dataset):
    with pytest.raises(DatasetValidationError) as excinfo:
        DatasetValidator(dataset).validate()
    assert excinfo.value.exit_code == 3
