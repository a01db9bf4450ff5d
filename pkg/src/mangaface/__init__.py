"""Unpaired photo-to-manga face translation at desk scale.

Two branches translate a frontal face photo into the manga domain: per-region
appearance GANs with similarity-preserving and structural-smoothing losses,
and fully-connected geometry GANs that exaggerate landmark attributes. A
synthesis engine fuses the pieces and an HTTP service backs the interactive
composition editor.
"""

__version__ = "0.1.0"
