"""
Repository for CSV and JSON run artifacts
"""
import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel

from models import ExperimentConfig
from tomography_config import __version__, tomography_config

logger = logging.getLogger(__name__)


def format_cell(value: Any) -> str:
    """Scientific notation for floats, plain text otherwise"""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.6e}"
    if hasattr(value, 'item') and not isinstance(value, (str, bytes)):
        return format_cell(value.item())
    return str(value)


def provenance_line(config_hash: str, seed: int, version: str = __version__) -> str:
    return f"# config_hash={config_hash}, seed={seed}, version={version}"


def parse_provenance(line: str) -> Dict[str, str]:
    """Inverse of provenance_line"""
    if not line.startswith('#'):
        raise ValueError(f"Not a provenance line: {line!r}")
    pairs = [item.strip().split('=', 1) for item in line[1:].split(',')]
    return {key.strip(): value.strip() for key, value in pairs}


class ArtifactRepository:
    """Writes run artifacts below one output directory"""

    def __init__(self, output_dir: Optional[str], config: ExperimentConfig, seed: Optional[int] = None):
        self.output_dir = tomography_config.output_path(output_dir)
        self.config = config
        self.seed = config.seed if seed is None else seed
        self.config_hash = config.config_hash()

    def _path(self, name: str) -> Path:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        return self.output_dir / name

    def write_csv(self, name: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
        """Write a CSV with a provenance comment line and a header row"""
        for index, row in enumerate(rows):
            if len(row) != len(header):
                logger.error(f"[REPO WRITE] Row {index} of {name} has {len(row)} cells, header has {len(header)}")
                raise ValueError(f"Row {index} has {len(row)} cells, header has {len(header)}")
        path = self._path(name)
        try:
            logger.info(f"[REPO WRITE] Writing {len(rows)} rows to {path}")
            with path.open('w', newline='', encoding='utf-8') as handle:
                handle.write(provenance_line(self.config_hash, self.seed) + '\n')
                writer = csv.writer(handle, lineterminator='\n')
                writer.writerow(header)
                writer.writerows([format_cell(cell) for cell in row] for row in rows)
            return path
        except OSError as e:
            logger.error(f"[REPO WRITE] Could not write {path}: {e}")
            raise

    def write_json(self, name: str, model: BaseModel) -> Path:
        path = self._path(name)
        try:
            logger.info(f"[REPO WRITE] Writing {type(model).__name__} to {path}")
            path.write_text(model.model_dump_json(indent=2) + '\n', encoding='utf-8')
            return path
        except OSError as e:
            logger.error(f"[REPO WRITE] Could not write {path}: {e}")
            raise

    def read_csv(self, name: str) -> Tuple[Dict[str, str], List[str], List[List[str]]]:
        """Read back (provenance, header, rows)"""
        path = self.output_dir / name
        try:
            with path.open('r', newline='', encoding='utf-8') as handle:
                provenance = parse_provenance(handle.readline().rstrip('\n'))
                reader = csv.reader(handle)
                header = next(reader)
                return provenance, header, [row for row in reader]
        except FileNotFoundError:
            logger.error(f"[REPO READ] Artifact not found: {path}")
            raise

    def read_json(self, name: str) -> Dict[str, Any]:
        path = self.output_dir / name
        return json.loads(path.read_text(encoding='utf-8'))
