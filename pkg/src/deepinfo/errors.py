"""Exception hierarchy.

Every error carries a stable ``kind`` string; the CLI reports it in its JSON
error payload and maps it to an exit code.
"""


class DeepInfoError(ValueError):
    kind = "error"

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        out = {"error": self.kind, "message": str(self)}
        for key, value in self.details.items():
            if hasattr(value, "tolist"):
                value = value.tolist()
            out[key] = value
        return out


class InsufficientSamplesError(DeepInfoError):
    kind = "insufficient-samples"


class InvalidDataError(DeepInfoError):
    kind = "invalid-data"


class DegenerateVariablesError(DeepInfoError):
    kind = "degenerate-variables"


class InsufficientPermutationsError(DeepInfoError):
    kind = "insufficient-permutations"


class InvalidLevelError(DeepInfoError):
    kind = "invalid-level"


class RankDeficientDesignError(DeepInfoError):
    kind = "rank-deficient-design"


class InvalidRankError(DeepInfoError):
    kind = "invalid-rank"


class InvalidScaleError(DeepInfoError):
    kind = "invalid-scale"


class InvalidSpecError(DeepInfoError):
    kind = "invalid-spec"


class InvalidConfigError(DeepInfoError):
    kind = "invalid-config"


class InvalidInputError(DeepInfoError):
    kind = "invalid-input"


class InvalidLabelError(DeepInfoError):
    kind = "invalid-label"


class TrainingDivergedError(DeepInfoError):
    kind = "training-diverged"


class EmptySetError(DeepInfoError):
    kind = "empty-set"


class NotPositiveDefiniteError(DeepInfoError):
    kind = "not-positive-definite"


class DegenerateRowError(DeepInfoError):
    kind = "degenerate-row"


class DegenerateMapError(DeepInfoError):
    kind = "degenerate-map"


class CorruptFileError(DeepInfoError):
    kind = "corrupt-file"


class InvalidGeometryError(DeepInfoError):
    kind = "invalid-geometry"


class MissingInputError(DeepInfoError):
    kind = "missing-input"


class SchemaError(DeepInfoError):
    kind = "schema-violation"


class OutputExistsError(DeepInfoError):
    kind = "output-exists"


class UsageError(DeepInfoError):
    kind = "usage"
