"""Flood Monitoring System: two river segments (sensor + mediator each) and a gateway.

Topology::

    Upstream -> segment1.mediator -> segment2.mediator -> gateway -> Alarm
                  ^ segment1.sensor    ^ segment2.sensor

At start-up every sensor and the gateway broadcast their coordinate, which
walks each mediator through its two coordinate-collecting states.  Sensors
then emit one depth reading per period (the second sensor is phase shifted so
its readings do not collide with forwarded ones).  The gateway raises an
``Alarm`` carrying the offending measure whenever a received depth exceeds the
flood threshold.

The atomic behaviour is written in the model dialect, so the same text is
shipped as model files.  Dialect outputs can only forward or emit default
messages; the programmatic model swaps in concrete readings.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from importlib import resources

from ..devs import (
    SELF, AtomicSpec, Coupling, CoupledSpec, MessageValue, Output, Port, compile_text,
)
from ..devs.model import INPUT, OUTPUT

TYPES_TEXT = """\
A Distance has a value!
the range of Distance's value is Integer!
use distance with type Distance!

A Abscissa has a value!
the range of Abscissa's value is Integer!
use abscissa with type Abscissa!
A Ordinate has a value!
the range of Ordinate's value is Integer!
use ordinate with type Ordinate!
Coordinate has x and y!
the range of Coordinate's x is Abscissa!
the range of Coordinate's y is Ordinate!
use coordinate with type Coordinate!

A Depth has a value!
the range of Depth's value is Integer!
use depth with type Depth!
Measure has coordinate and depth!
the range of Measure's coordinate is Coordinate!
the range of Measure's depth is Depth!
use measure with type Measure!
"""


@dataclass(frozen=True)
class FmsParams:
    sensor_count: int = 2
    mediator_count: int = 2
    flood_depth_threshold: float = 10.0
    sensor_period: float = 5.0
    depth_sequences: tuple = ((3, 5, 7, 9, 11), (2, 3, 4, 5, 6))
    phase_offsets: tuple = (0.0, 3.0)
    boot_time: float = 2.0

    def __post_init__(self):
        if self.sensor_count != 2 or self.mediator_count != 2:
            raise ValueError("the FMS topology has exactly two sensors and two mediators")
        if not self.flood_depth_threshold > 0:
            raise ValueError("flood_depth_threshold must be positive")
        if not self.sensor_period > 0 or self.boot_time < 0:
            raise ValueError("sensor_period must be positive and boot_time nonnegative")
        if len(self.depth_sequences) != 2 or not all(len(s) for s in self.depth_sequences):
            raise ValueError("need one nonempty depth sequence per sensor")
        if len(self.phase_offsets) != 2 or min(self.phase_offsets) < 0:
            raise ValueError("need one nonnegative phase offset per sensor")


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def sensor_text(readings: int, period: float = 5.0, offset: float = 0.0, boot: float = 2.0) -> str:
    lines = [TYPES_TEXT,
             "generates output on Coordinate with type Coordinate!",
             "generates output on Measure with type Measure!",
             "",
             f"to start hold in boot for time {_num(boot)}!",
             "after boot output Coordinate!",
             "from boot go to r0!"]
    for k in range(readings):
        nxt = f"r{k + 1}" if k + 1 < readings else "done"
        lines += [f"hold in r{k} for time {_num(period + offset if k == 0 else period)}!",
                  f"after r{k} output Measure!",
                  f"from r{k} go to {nxt}!"]
    lines.append("passivate in done!")
    return "\n".join(lines) + "\n"


def gateway_text(threshold: float = 10.0, boot: float = 2.0) -> str:
    return "\n".join([
        TYPES_TEXT,
        "accepts input on Measure with type Measure!",
        "generates output on Coordinate with type Coordinate!",
        "generates output on Alarm with type Measure!",
        "",
        f"to start hold in boot for time {_num(boot)}!",
        "after boot output Coordinate!",
        "from boot go to idle!",
        "passivate in idle!",
        f"when in idle and receive Measure with depth's value above {_num(threshold)} "
        "go to alarm otherwise go to idle!",
        "hold in alarm for time 0!",
        "after alarm output Alarm!",
        "from alarm go to idle!",
    ]) + "\n"


def segment_text(index: int) -> str:
    """Coupled-model text of one river segment (1 upstream, 2 next to the gateway)."""
    lines = [f'component sensor from "sensor{index}.devsnl"!',
             'component mediator from "mediator.devsnl"!',
             "accepts input on Upstream with type Measure!",
             "accepts input on NextCoordinate with type Coordinate!",
             "generates output on Measure with type Measure!"]
    if index == 2:
        lines.append("generates output on SensorCoordinate with type Coordinate!")
    lines += ["couple sensor.Coordinate to mediator.FromCoordinate!",
              "couple self.NextCoordinate to mediator.ToCoordinate!",
              "couple sensor.Measure to mediator.FromSensors!",
              "couple self.Upstream to mediator.FromSensors!",
              "couple mediator.Measure to self.Measure!"]
    if index == 2:
        lines.append("couple sensor.Coordinate to self.SensorCoordinate!")
    return "\n".join(lines) + "\n"


FMS_TEXT = """\
component segment1 from "segment1.devsc"!
component segment2 from "segment2.devsc"!
component gateway from "gateway.devsnl"!
accepts input on Upstream with type Measure!
generates output on Alarm with type Measure!
couple self.Upstream to segment1.Upstream!
couple segment2.SensorCoordinate to segment1.NextCoordinate!
couple segment1.Measure to segment2.Upstream!
couple gateway.Coordinate to segment2.NextCoordinate!
couple segment2.Measure to gateway.Measure!
couple gateway.Alarm to self.Alarm!
"""


def mediator_spec() -> AtomicSpec:
    text = resources.files("simse.models").joinpath("data", "mediator.devsnl").read_text(encoding="utf-8")
    return compile_text(text, "mediator")


def coordinate(x: int, y: int = 0) -> MessageValue:
    return MessageValue("Coordinate", {"x": MessageValue("Abscissa", {"value": x}),
                                       "y": MessageValue("Ordinate", {"value": y})})


def measure(x: int, depth: int, y: int = 0) -> MessageValue:
    return MessageValue("Measure", {"coordinate": coordinate(x, y), "depth": MessageValue("Depth", {"value": depth})})


def sensor_spec(index: int, depths, period: float, offset: float, boot: float) -> AtomicSpec:
    spec = compile_text(sensor_text(len(depths), period, offset, boot), f"sensor{index}")
    outputs = {"boot": (Output("Coordinate", coordinate(index)),)}
    for k, d in enumerate(depths):
        outputs[f"r{k}"] = (Output("Measure", measure(index, int(d))),)
    return replace(spec, outputs=outputs)


def _segment(index: int, sensor: AtomicSpec, mediator: AtomicSpec) -> CoupledSpec:
    ports = {Port("Upstream", INPUT, "Measure"), Port("NextCoordinate", INPUT, "Coordinate"),
             Port("Measure", OUTPUT, "Measure")}
    couplings = [Coupling("sensor", "Coordinate", "mediator", "FromCoordinate"),
                 Coupling(SELF, "NextCoordinate", "mediator", "ToCoordinate"),
                 Coupling("sensor", "Measure", "mediator", "FromSensors"),
                 Coupling(SELF, "Upstream", "mediator", "FromSensors"),
                 Coupling("mediator", "Measure", SELF, "Measure")]
    if index == 2:
        ports.add(Port("SensorCoordinate", OUTPUT, "Coordinate"))
        couplings.append(Coupling("sensor", "Coordinate", SELF, "SensorCoordinate"))
    return CoupledSpec(f"segment{index}", (("sensor", sensor), ("mediator", mediator)),
                       frozenset(ports), tuple(couplings))


def fms_model(params: FmsParams = FmsParams()) -> CoupledSpec:
    mediator = mediator_spec()
    segments = []
    for i in (1, 2):
        sensor = sensor_spec(i, params.depth_sequences[i - 1], params.sensor_period,
                             params.phase_offsets[i - 1], params.boot_time)
        segments.append(_segment(i, sensor, mediator))
    gateway = compile_text(gateway_text(params.flood_depth_threshold, params.boot_time), "gateway")
    gateway = replace(gateway, outputs={**gateway.outputs, "boot": (Output("Coordinate", coordinate(3)),)})
    couplings = (Coupling(SELF, "Upstream", "segment1", "Upstream"),
                 Coupling("segment2", "SensorCoordinate", "segment1", "NextCoordinate"),
                 Coupling("segment1", "Measure", "segment2", "Upstream"),
                 Coupling("gateway", "Coordinate", "segment2", "NextCoordinate"),
                 Coupling("segment2", "Measure", "gateway", "Measure"),
                 Coupling("gateway", "Alarm", SELF, "Alarm"))
    ports = frozenset({Port("Upstream", INPUT, "Measure"), Port("Alarm", OUTPUT, "Measure")})
    return CoupledSpec("fms", (("segment1", segments[0]), ("segment2", segments[1]), ("gateway", gateway)),
                       ports, couplings)


def shipped_files(params: FmsParams = FmsParams()) -> dict[str, str]:
    """Text of the FMS model files (the mediator is shipped separately)."""
    return {
        "fms.devsc": FMS_TEXT,
        "segment1.devsc": segment_text(1),
        "segment2.devsc": segment_text(2),
        "sensor1.devsnl": sensor_text(len(params.depth_sequences[0]), params.sensor_period,
                                      params.phase_offsets[0], params.boot_time),
        "sensor2.devsnl": sensor_text(len(params.depth_sequences[1]), params.sensor_period,
                                      params.phase_offsets[1], params.boot_time),
        "gateway.devsnl": gateway_text(params.flood_depth_threshold, params.boot_time),
    }
