"""Cost tables, hauler options, and run-mode enums."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import ValidationError


class Pattern(str, Enum):
    """Hub operation pattern a run is solved under."""

    FLU_MCP = "flu-mcp"
    FLU_SCP = "flu-scp"
    HS = "hs"


class Consistency(str, Enum):
    """Schedule-consistency regime for contracted services."""

    WEEKLY = "weekly"
    DAILY = "daily"


DEFAULT_HAULER_RATES: dict[int, float] = {8: 10.0, 4: 5.0}


@dataclass(frozen=True)
class HaulerOption:
    """One offered hauler size with its hourly rental rate."""

    size: int
    hourly_rate: float

    def __post_init__(self) -> None:
        if self.size <= 0:
            raise ValidationError(f"hauler size must be positive, got {self.size}")
        if self.hourly_rate <= 0:
            raise ValidationError(f"hauler rate must be positive, got {self.hourly_rate}")


@dataclass(frozen=True)
class CostParams:
    """Price book for contracting, rentals, and outsourcing.

    Defaults are per-hour dollar rates for drivers and equipment, a per
    vehicle-mile outsourcing rate, the daily-consistency discount applied to
    driver fees, an average speed used by the bundled testbed generator, and
    the default contracted trucker capacity per service.
    """

    driver_hourly: float = 29.0
    tractor_hourly: float = 18.0
    hauler_hourly_by_size: dict[int, float] = field(
        default_factory=lambda: dict(DEFAULT_HAULER_RATES)
    )
    outsource_per_vehicle_mile: float = 0.93
    consistency_discount: float = 0.8
    avg_mph: float = 50.0
    default_capacity: int = 10

    def __post_init__(self) -> None:
        for name in ("driver_hourly", "tractor_hourly", "outsource_per_vehicle_mile", "avg_mph"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")
        if not 0 < self.consistency_discount <= 1:
            raise ValidationError("consistency_discount must be in (0, 1]")
        if self.default_capacity < 0:
            raise ValidationError("default_capacity must be nonnegative")
        for size, rate in self.hauler_hourly_by_size.items():
            if size <= 0 or rate <= 0:
                raise ValidationError(f"invalid hauler rate entry {size}: {rate}")

    def hauler_options(self, sizes: tuple[int, ...] | list[int]) -> tuple[HaulerOption, ...]:
        """Resolve hauler sizes against the rate table.

        Raises ValidationError for unknown or duplicate sizes.
        """
        if len(set(sizes)) != len(sizes):
            raise ValidationError(f"duplicate hauler sizes in {sizes}")
        options = []
        for size in sizes:
            if size not in self.hauler_hourly_by_size:
                raise ValidationError(
                    f"hauler size {size} has no hourly rate (known: "
                    f"{sorted(self.hauler_hourly_by_size)})"
                )
            options.append(HaulerOption(size, self.hauler_hourly_by_size[size]))
        return tuple(options)
