from seq2seq_univ.consts import (
    ACTIVATION_ERROR,
    BUDGET_EXCEEDED_ERROR,
    CONFIG_ERROR,
    CONVERSION_ERROR,
    GENERAL_ERROR,
    GRID_ERROR,
    MODE_ERROR,
    SHAPE_ERROR,
    TARGET_ERROR,
    VALUE_WINDOW_COLLISION_ERROR,
)


class Seq2SeqUnivError(Exception):
    """General error raised by the construction and verification code"""

    code = GENERAL_ERROR


class ModeError(Seq2SeqUnivError):
    """Exact and Float values mixed, or a transcendental op on Exact input"""

    code = MODE_ERROR


class ShapeError(Seq2SeqUnivError):
    """Matrix dimensions do not line up"""

    code = SHAPE_ERROR


class GridError(Seq2SeqUnivError):
    """Invalid grid resolution or grid parameters"""

    code = GRID_ERROR


class ActivationError(Seq2SeqUnivError):
    """
    Piecewise linear activation with unordered breakpoints
    or without a constant piece
    """

    code = ACTIVATION_ERROR


class BudgetExceededError(Seq2SeqUnivError):
    """
    Layer stack or grid enumeration would exceed
    settings.SEQ2SEQ_UNIV_BUDGET or settings.SEQ2SEQ_UNIV_ENUMERATION_LIMIT
    """

    code = BUDGET_EXCEEDED_ERROR


class ValueWindowCollisionError(Seq2SeqUnivError):
    """Two value mapping windows overlap or catch an unintended column id"""

    code = VALUE_WINDOW_COLLISION_ERROR


class TargetError(Seq2SeqUnivError):
    """Target function is malformed, non-finite or not equivariant"""

    code = TARGET_ERROR


class ConversionError(Seq2SeqUnivError):
    """Network or activation cannot be annealed"""

    code = CONVERSION_ERROR


class ConfigError(Seq2SeqUnivError):
    """Run configuration or an input document could not be parsed or validated"""

    code = CONFIG_ERROR
