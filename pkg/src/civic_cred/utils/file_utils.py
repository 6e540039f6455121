"""File and directory operations utilities."""

import os
import tempfile
from pathlib import Path
from typing import List, Union

PathLike = Union[str, Path]


def ensure_directory(directory: PathLike) -> Path:
    """Create directory if it doesn't exist.

    Args:
        directory: Directory path to create

    Returns:
        Path: Path object for the directory

    Example:
        out_dir = ensure_directory("runs/transit-1")
    """
    dir_path = Path(directory)
    dir_path.mkdir(parents=True, exist_ok=True)
    return dir_path


def ensure_parent_directory(file_path: PathLike) -> Path:
    """Create parent directory for a file if it doesn't exist.

    Returns:
        Path: Path object for the parent directory
    """
    parent = Path(file_path).parent
    if parent != Path("."):
        parent.mkdir(parents=True, exist_ok=True)
    return parent


def atomic_write_text(file_path: PathLike, text: str) -> Path:
    """Write text to a file via a temporary sibling and a rename.

    Readers see either the old file or the complete new one, never a
    partial write.

    Args:
        file_path: Destination path
        text: Content to write (UTF-8)

    Returns:
        Path: The destination path

    Example:
        atomic_write_text("runs/transit-1/report.json", body)
    """
    target = Path(file_path)
    ensure_parent_directory(target)
    fd, tmp_name = tempfile.mkstemp(
        prefix=f".{target.name}.", suffix=".tmp", dir=str(target.parent)
    )
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp_name, target)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    return target


def list_files_with_extension(
    directory: PathLike, extension: str, recursive: bool = False
) -> List[Path]:
    """List all files with specific extension in directory, sorted by name.

    Args:
        directory: Directory to search
        extension: File extension (without dot)
        recursive: Whether to search recursively (default: False)

    Returns:
        Sorted list of Path objects for matching files

    Example:
        transcripts = list_files_with_extension("runs/transit-1", "jsonl")
    """
    dir_path = Path(directory)
    if not dir_path.exists():
        return []

    pattern = f"**/*.{extension}" if recursive else f"*.{extension}"
    return sorted(dir_path.glob(pattern))


def directory_exists(directory: PathLike) -> bool:
    """Check if directory exists."""
    return Path(directory).is_dir()
