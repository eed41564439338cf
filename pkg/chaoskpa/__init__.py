from .core.core import Workbench

workbench = Workbench()
