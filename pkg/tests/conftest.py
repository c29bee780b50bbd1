import hypothesis

# Property tests run numpy-heavy bodies; wall-clock deadlines only add noise
# on a loaded machine.
hypothesis.settings.register_profile("artifact", deadline=None, max_examples=50)
hypothesis.settings.load_profile("artifact")
