from codec.config import CodecConfig


class CodecState:
    """Per-user delta baselines for one direction of one connection.

    On the encoder a baseline is the last transmitted (quantized) frame,
    on the decoder the last reconstructed one. Both sides must see the
    same sequence of commits for the two to stay identical.
    """

    def __init__(self, layout, config=None):
        self.layout = layout
        self.config = config or CodecConfig()
        self._baselines = {}

    def baseline(self, user):
        return self._baselines.get(user)

    def last_seq(self, user):
        frame = self._baselines.get(user)
        return None if frame is None else frame.seq

    def commit(self, user, frame):
        self._baselines[user] = frame

    def rollback(self, user, previous):
        """Restore the baseline that was current before an undelivered encode."""
        if previous is None:
            self._baselines.pop(user, None)
        else:
            self._baselines[user] = previous

    def reset(self, user=None):
        if user is None:
            self._baselines.clear()
        else:
            self._baselines.pop(user, None)

    def users(self):
        return tuple(sorted(self._baselines))

    def __len__(self):
        return len(self._baselines)
