try:
    from ._neuronurbs import *  # noqa: F401,F403
except ImportError:  # build-tree layout: module next to this package on sys.path
    from _neuronurbs import *  # noqa: F401,F403
