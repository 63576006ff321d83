"""Reference external trainer for the slice-tuner/1 stdio protocol."""

from .plugin import Plugin, PluginDataset, eval_losses, main, serve, train_classifier

__all__ = ["Plugin", "PluginDataset", "eval_losses", "main", "serve", "train_classifier"]
