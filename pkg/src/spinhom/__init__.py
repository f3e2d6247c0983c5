"""Calculator for categorified spin networks over Bar-Natan cobordism
categories: window-truncated universal projectors, planar composition,
delooping and Gaussian elimination, duality-based morphism complexes, and
bigraded homology checked against an exact Temperley-Lieb oracle."""

__version__ = "0.1.0"
