"""
Export utilities for writing CSV, JSON and JSON-lines result files.

Every file starts with a header block recording the package version, the
full configuration and the seed, so that reruns with an identical
configuration produce byte-identical files.
"""
import csv
import json
import math
from pathlib import Path

import numpy as np

from apps.core.utils import format_float


class ExportService:
    """Service for exporting results to various formats."""

    @staticmethod
    def build_header(version, config, seed):
        """Header block shared by all output formats."""
        return {
            'version': version,
            'seed': seed,
            'config': ExportService.to_plain(config),
        }

    @staticmethod
    def to_csv(rows, path, columns, header):
        """
        Write rows to a CSV file.

        Args:
            rows: List of dictionaries
            path: Output file path
            columns: List of column keys, written as the header row
            header: Header block, written as leading '# key: value' lines
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)

        with path.open('w', newline='', encoding='utf-8') as handle:
            for key, value in header.items():
                handle.write(f'# {key}: {ExportService.dumps(value, indent=None)}\n')

            writer = csv.writer(handle, lineterminator='\n')
            writer.writerow(columns)
            for row in rows:
                writer.writerow([
                    ExportService._format_value(row.get(column, ''))
                    for column in columns
                ])

        return path

    @staticmethod
    def to_json(data, path, header):
        """Write a JSON document whose first member is the header block."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        document = {'header': header, **ExportService.to_plain(data)}
        path.write_text(ExportService.dumps(document) + '\n', encoding='utf-8')
        return path

    @staticmethod
    def to_jsonl(records, path, header):
        """Write JSON lines; the first line holds the header block."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open('w', encoding='utf-8') as handle:
            handle.write(ExportService.jsonl_text(records, header))
        return path

    @staticmethod
    def jsonl_text(records, header):
        lines = [ExportService.dumps({'header': header}, indent=None)]
        lines.extend(ExportService.dumps(record, indent=None) for record in records)
        return '\n'.join(lines) + '\n'

    @staticmethod
    def dumps(data, indent=2):
        return json.dumps(ExportService.to_plain(data), indent=indent, allow_nan=False)

    @staticmethod
    def to_plain(value):
        """Convert numpy containers and scalars into JSON-compatible values."""
        if isinstance(value, dict):
            return {str(k): ExportService.to_plain(v) for k, v in value.items()}
        if isinstance(value, (list, tuple)):
            return [ExportService.to_plain(v) for v in value]
        if isinstance(value, np.ndarray):
            return ExportService.to_plain(value.tolist())
        if isinstance(value, (bool, np.bool_)):
            return bool(value)
        if isinstance(value, (int, np.integer)):
            return int(value)
        if isinstance(value, (float, np.floating)):
            value = float(value)
            return value if math.isfinite(value) else None
        return value

    @staticmethod
    def _format_value(value):
        """Format value for export."""
        if value is None:
            return ''
        if isinstance(value, (bool, np.bool_)):
            return 'true' if value else 'false'
        if isinstance(value, (int, np.integer)):
            return int(value)
        if isinstance(value, (float, np.floating)):
            return format_float(value)
        return value
