from properpath import ProperPath

APP_NAME = "radialgdp"


def app_dirs():
    """
    Platform directories of `radialgdp`. Every `*_path`/`*_dir` attribute is a `ProperPath`.

    Example:
        ```python
        app_dirs().user_cache_path  # e.g. ProperPath('~/.cache/radialgdp') on Linux
        ```
    """
    return ProperPath.platformdirs(APP_NAME, appauthor=False, follow_unix=True)


def eigenbasis_cache_dir() -> ProperPath:
    return ProperPath(app_dirs().user_cache_path, "eigenbasis", kind="dir")


def fallback_workdir() -> ProperPath:
    """Where runs go when the configured working directory is not writable."""
    return ProperPath(app_dirs().user_data_path, "runs", kind="dir")


def workdir_candidates(workdir) -> list[ProperPath]:
    """The configured working directory first, then the platform fallback."""
    return [ProperPath(workdir, kind="dir"), fallback_workdir()]
