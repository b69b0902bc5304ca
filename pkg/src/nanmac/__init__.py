"""Radio analysis and MAC simulation for smart-meter neighbourhood networks."""
__version__ = "0.1.0"
