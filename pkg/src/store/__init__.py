# Store package
from .artifacts import ArtifactStore
