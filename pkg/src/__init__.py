# MNL Best-Arm Identification
__version__ = "1.0.1"
