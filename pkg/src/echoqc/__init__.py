"""echoqc: objective quality scoring for 2D echocardiogram cine loops."""

__version__ = "0.1.0"
