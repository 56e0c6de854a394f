"""Teleoperated swab robot control stack with a hardware-in-the-loop sim.

The package splits along the physical architecture: ``gripper`` models
the force-sensing flexure and its optical pickup, ``calibration`` turns
bench records into a voltage-to-force curve, ``motion`` enforces axis
kinematics and payload slip, ``procedure`` runs the sampling state
machine and safety supervision, ``tissue`` is the contact plant,
``session`` closes the loop at a fixed control rate, and ``protocol``
plus ``server`` expose it to operator consoles over TCP or WebSocket.
"""

from .calibration import (AcquisitionError, CalibrationCurve,
                          CalibrationRecord, CalibrationRig, FitError,
                          ForceReading, acquire_record, fit_curve,
                          force_from_voltage, make_grid, voltage_at_force)
from .config import (CalibrationConfig, ConfigError, RigConfig, SafetyConfig,
                     ServiceConfig, default_config, load_config)
from .gripper import (BeamModel, OptoSensorModel, SensorReading,
                      deflection_from_force, simulate_raw_reading,
                      voltage_from_deflection)
from .motion import (AxisState, JogCommand, MotionConfig, RobotState,
                     apply_slip, make_robot_state, mix_joystick, step_axes,
                     step_axis)
from .procedure import (ButtonEvent, Phase, PoseConfig, ProcedureConfig,
                        ProcedureController, SafetyLevel, SafetyStatus,
                        TickInput, TickResult, check_safety, classify_force,
                        validate_pose)
from .protocol import (Command, CommandKind, ConfigInfo, ProtocolError,
                       Telemetry, decode_command, decode_telemetry,
                       encode_command, encode_telemetry)
from .server import RobotServer
from .session import (ScriptCommand, ScriptRunResult, Session, SessionSummary,
                      TraceRow, TraceStats, load_script, load_trace,
                      make_standard_script, rep_statistics, run_script,
                      save_script, save_trace, split_reps, trace_statistics)
from .tissue import (Direction, Peak, TissueProfile, contact_force,
                     load_profile, make_phantom_profile, make_pig_profile,
                     make_wall_profile, save_profile)

__version__ = "0.1.0"
