"""Age-of-information scheduling for LEO-backhauled vehicle platoons."""

__version__ = "0.1.0"
