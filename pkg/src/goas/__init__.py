"""Generic-object anti-spoofing toolkit: procedural datasets with
ground-truth injected noise, learnable noise prototypes, targeted spoof
synthesis, sensor/medium classification, and video-level evaluation."""

__version__ = "0.1.0"
