"""Bi-temporal mining-pond change detection.

Core pieces: raster IO and display composites, histogram matching and
feature stacking, water-index based semi-automatic labeling, a
from-scratch nu-SVM family (plain, composite-kernel, superpixel
multi-kernel, and two-stage with total-variation denoising),
imbalance-aware evaluation, a synthetic scene generator, and an
experiment runner with a label-correction HTTP service.
"""

__version__ = "0.1.0"
