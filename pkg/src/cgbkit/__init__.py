"""Numerical checks of Chern-Gauss-Bonnet integrands and total-curvature bounds.

Modules
-------
forms
    Sparse alternating forms, wedge products and Pfaffian forms.
manifold
    Chart metrics, curvature, orthonormal frames, nullity, geodesics.
hypersurface
    Closed convex hypersurfaces: normal, shape operator, induced metric.
gaussbonnet
    Pfaffian and transgression integrands and the total-curvature verdicts.
quadrature
    Hyperspherical product grids and radial integration.
"""

__version__ = "0.1.0"
