from .config import *
from .metrics import *
