import sys
from pathlib import Path


def resource_path(relative_path: str) -> str:
    try:
        base_path = Path(sys._MEIPASS)  # type: ignore
    except AttributeError:
        base_path = Path(__file__).resolve().parent.parent

    return str(base_path / relative_path)


def locate_job(name: str) -> Path:
    """Resolve a job file: as given, then among the bundled jobs/ defaults."""
    candidate = Path(name)
    if candidate.exists():
        return candidate
    # 打包后的可执行文件里默认任务位于 _MEIPASS/jobs
    for relative in (Path("jobs") / candidate.name, Path("jobs") / f"{candidate.name}.json", candidate):
        bundled = Path(resource_path(str(relative)))
        if bundled.exists():
            return bundled
    return candidate
