"""Default parameters, in one place.

The radiometric scale differs by distance: the KL divergence grows like
``a/b + b/a`` for scalars while the two Riemannian distances grow like
``|log(a/b)|``, hence the larger ``gamma_r`` for KL.
"""

# spatial Gaussian scale (pixels) and the square window it is truncated to
GAMMA_S = 2.2
WINDOW = 11
WINDOW_HALF = WINDOW // 2

# radiometric Gaussian scale and iteration count, per distance
GAMMA_R = {"ai": 1.33, "le": 1.33, "kl": 3.11}
N_ITER = {"ai": 4, "le": 4, "kl": 4}

# pixels with 1/kappa below this are treated as rank deficient
COND_THRESHOLD = 1e-6

# reference boxcar window
BOXCAR_SIZE = 7

# synthetic scene
SCENE_SIZE = 512
LOOKS = 4

# display: per-channel clip quantile for Pauli RGB
RGB_CLIP_QUANTILE = 0.99
RGB_GAMMA = 0.7
