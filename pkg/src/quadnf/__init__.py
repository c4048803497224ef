"""quadnf: exact normal forms and hyperquadric embeddings for hypersurface germs.

Subpackages are organized by mathematical layer:

* rational    - the coefficient field Q(i), exact throughout
* series      - truncated formal power series (weighted grading: z -> 1, w -> 2)
* linalg      - exact dense linear algebra over Q(i) plus mod-p screens
* hermitian   - rank/signature profiles, square decompositions, class tests
* quadric     - hyperquadric models, automorphism group, defining-series action
* chern_moser - the operator L on jets: assembly, kernels, solve-or-refute
* embedding   - building, normalizing and factoring embeddings into quadrics
* cli         - batch JSON frontend (console script: quadnf)
"""

__version__ = "0.1.0"

from .rational import GaussianRational, gr, rat, rat_str  # noqa: F401
