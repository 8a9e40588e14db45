"""Physical and timing constants for the simulated robot.

Declared defaults approximating a small differential-drive platform;
used everywhere a caller does not override them explicitly.
"""

ROBOT_RADIUS = 0.085        # m
AXLE_LENGTH = 0.14          # m, wheel separation
MAX_WHEEL_SPEED = 0.2       # m/s
TARGET_RADIUS = 0.3         # m, "target found" distance
CONTROL_DT = 0.1            # s, controller tick
N_SUBSTEPS = 10             # physics substeps per control tick
SUBSTEP_DT = CONTROL_DT / N_SUBSTEPS

WALL_THICKNESS = 0.1        # m
CELLS_PER_METER = 10        # default occupancy-grid resolution scale
