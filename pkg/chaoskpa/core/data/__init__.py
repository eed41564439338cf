from .archive import read_archive, read_manifest, write_archive
from .cifar import load_cifar10, load_cifar10_dir
from .collection import ImageCollection, stack_images
from .fetch import fetch
from .mnist import load_mnist, load_mnist_dir
from .netpbm import read_pnm, write_pnm
from .pairs import TEST, TRAIN, UNASSIGNED, PairSet, make_pairs, split
