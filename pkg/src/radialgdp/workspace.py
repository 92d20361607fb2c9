import logging
from pathlib import Path
from typing import Iterable, Optional

from properpath import ProperPath

from .errors import ArtifactNotFoundError
from .utils import Stage


class Workspace:
    """
    The working directory of a pipeline run: one subdirectory per `Stage`, each holding the
    artifacts that stage writes and the next stages read.

    Stage directories are `ProperPath` instances sharing the workspace `err_logger`, so
    failed creations and removals are logged at DEBUG level before they are re-raised.

    Example:
        ```python
        workspace = Workspace("runs/demo")
        release_dir = workspace.prepare(Stage.release)
        report = workspace.require(Stage.release, "release_report.json")
        ```

    Attributes:
        default_err_logger (logging.Logger): Logger shared by all workspaces created without
            an `err_logger`.
    """

    default_err_logger: logging.Logger = logging.getLogger(__name__)

    def __init__(self, root: Path | str, err_logger: Optional[logging.Logger] = None):
        self.err_logger = err_logger or Workspace.default_err_logger
        self.root = ProperPath(root, kind="dir", err_logger=self.err_logger)

    def __repr__(self):
        return f"{self.__class__.__name__}(root={str(self.root)!r})"

    def __rich_repr__(self):
        yield "root", str(self.root)
        yield "stages", [stage.value for stage in Stage if self.stage_dir(stage).is_dir()]

    def stage_dir(self, stage: Stage | str) -> ProperPath:
        return ProperPath(
            self.root, Stage(stage).value, kind="dir", err_logger=self.err_logger
        )

    def prepare(self, stage: Stage | str, clear: bool = True) -> ProperPath:
        """
        Creates the directory of `stage`; with `clear=True` the artifacts of a previous run
        are removed first so that a stage never mixes outputs of two runs.

        Raises:
            OSError: If the directory cannot be cleared or created.
        """
        directory = self.stage_dir(stage)
        if clear and directory.exists():
            directory.remove(parent_only=False)
        directory.create()
        return directory

    def artifact(self, stage: Stage | str, name: str) -> ProperPath:
        return self.stage_dir(stage) / name

    def require(self, stage: Stage | str, name: str) -> ProperPath:
        """
        Raises:
            ArtifactNotFoundError: If an earlier stage did not write the artifact.
        """
        path = self.artifact(stage, name)
        if not path.is_file():
            message = (
                f"Artifact {name!r} of stage {Stage(stage).value!r} not found. "
                f"Run the {Stage(stage).value!r} stage first."
            )
            self.err_logger.debug(message)
            raise ArtifactNotFoundError(message, path=path)
        return path

    def artifacts(self, stage: Stage | str, pattern: str) -> list[ProperPath]:
        """
        Artifacts of `stage` matching `pattern`, sorted by name.

        Raises:
            ArtifactNotFoundError: If none match.
        """
        found = sorted(self.stage_dir(stage).glob(pattern))
        if not found:
            message = f"No {pattern!r} artifacts in stage {Stage(stage).value!r}."
            self.err_logger.debug(message)
            raise ArtifactNotFoundError(message, path=self.stage_dir(stage))
        return found

    def remove(self, stages: Optional[Iterable[Stage | str]] = None) -> None:
        """Removes the given stage directories (all of them by default)."""
        for stage in stages or Stage:
            directory = self.stage_dir(stage)
            if not directory.exists():
                continue
            directory.remove()
            # A non-empty directory is only emptied; the second call removes it.
            if directory.exists():
                directory.remove()
