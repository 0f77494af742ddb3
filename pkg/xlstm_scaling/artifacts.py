"""JSON artifacts: versioned, content-addressed and byte-stable on round trip."""

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
import hashlib
import json

import numpy as np

from xlstm_scaling import __version__
from xlstm_scaling.errors import DataError, SchemaVersionError

SCHEMA_VERSION = '1.0'


class ArtifactKind(str, Enum):
    LOSS_SURFACE = 'loss_surface'
    POWER_LAW = 'power_law'
    PARABOLA = 'parabola'
    RUNTIME_FIT = 'runtime_fit'
    PLAN = 'plan'
    COUNTS = 'counts'


def file_digest(path):
    """sha256 of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for block in iter(lambda: f.read(1 << 16), b''):
            digest.update(block)
    return 'sha256:' + digest.hexdigest()


def provenance(input_paths=()):
    return {
        'inputs': {str(path): file_digest(path) for path in input_paths},
        'tool_version': __version__,
    }


@dataclass
class ArtifactFile:
    kind: ArtifactKind
    payload: dict
    provenance: dict = field(default_factory=lambda: provenance())
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self):
        self.kind = ArtifactKind(self.kind)

    def to_dict(self):
        return {
            'schema_version': self.schema_version,
            'kind': self.kind.value,
            'payload': self.payload,
            'provenance': self.provenance,
        }


def to_jsonable(value):
    """json.dumps fallback for exact counts, numpy scalars and enums."""
    if isinstance(value, Fraction):
        return value.numerator if value.denominator == 1 else float(value)
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Enum):
        return value.value
    raise TypeError(f'{type(value).__name__} is not JSON serializable')


def dumps(obj):
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    if isinstance(obj, ArtifactFile):
        obj = obj.to_dict()
    return json.dumps(obj, sort_keys=True, indent=2, default=to_jsonable) + '\n'


def loads(text):
    try:
        data = json.loads(text)
    except ValueError as exc:
        raise DataError(f'artifact is not valid JSON: {exc}')
    if not isinstance(data, dict) or 'schema_version' not in data:
        raise DataError('artifact has no schema_version')
    if data['schema_version'] != SCHEMA_VERSION:
        raise SchemaVersionError(
            f'artifact schema {data["schema_version"]!r}, this tool reads {SCHEMA_VERSION!r}')
    try:
        return ArtifactFile(kind=data['kind'], payload=data['payload'],
                            provenance=data.get('provenance', {}),
                            schema_version=data['schema_version'])
    except (KeyError, ValueError) as exc:
        raise DataError(f'malformed artifact: {exc}')


def write_artifact(path, artifact):
    with open(path, 'w') as f:
        f.write(dumps(artifact))


def read_artifact(path, expected_kind=None):
    try:
        with open(path) as f:
            artifact = loads(f.read())
    except FileNotFoundError:
        raise DataError(f'no such file: {path}')
    if expected_kind is not None and artifact.kind is not ArtifactKind(expected_kind):
        raise DataError(f'{path} holds a {artifact.kind.value} artifact, '
                        f'expected {ArtifactKind(expected_kind).value}')
    return artifact


def fit_from_artifact(artifact, name, cls):
    """Rebuild the fit named ``name`` from an artifact's ``fits`` map."""
    fits = artifact.payload.get('fits', {})
    if name not in fits:
        raise DataError(f'artifact has no fit {name!r} (has: {", ".join(sorted(fits))})')
    try:
        return cls.from_dict(fits[name])
    except TypeError as exc:
        raise DataError(f'fit {name!r} is malformed: {exc}')
