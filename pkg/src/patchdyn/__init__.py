'''patchdyn - two-patch predator-prey models with predator dispersal'''
# PEP 396 module version attribute in PEP 440 version format
try:
    from .version import __version__
except ImportError:  # source tree without a build
    __version__ = '0.0.0'

# EOF
