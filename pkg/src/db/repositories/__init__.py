from .grams import *
from .runs import *
