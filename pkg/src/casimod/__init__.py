"""Thermal Casimir pressure between layered magnetodielectric plates and the
phase modulation of the force between corrugated Ni plates under a gold film."""

__version__ = "0.1.0"
