"""vidfactor: self-supervised video features by factoring clips into
foreground, background and motion, trained through masked first/last-frame
reconstruction with a motion-kernel feature transfer."""

__version__ = "0.1.0"
