"""Distribution feeder restoration planning with load-block shedding and
grid-forming inverter requirements."""

__version__ = "0.1.0"
