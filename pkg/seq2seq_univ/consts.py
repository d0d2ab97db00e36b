# Common errors
GENERAL_ERROR = "GENERAL_ERROR"
CONFIG_ERROR = "CONFIG_ERROR"

# Arithmetic and shape errors
MODE_ERROR = "MODE_ERROR"
SHAPE_ERROR = "SHAPE_ERROR"
GRID_ERROR = "GRID_ERROR"
ACTIVATION_ERROR = "ACTIVATION_ERROR"

# Construction errors
BUDGET_EXCEEDED_ERROR = "BUDGET_EXCEEDED_ERROR"
VALUE_WINDOW_COLLISION_ERROR = "VALUE_WINDOW_COLLISION_ERROR"
TARGET_ERROR = "TARGET_ERROR"
CONVERSION_ERROR = "CONVERSION_ERROR"

# Process exit statuses of the management commands
EXIT_OK = 0
EXIT_PROPERTY_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_BUDGET_EXCEEDED = 3
