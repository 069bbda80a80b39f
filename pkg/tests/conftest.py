import hypothesis

hypothesis.settings.register_profile("desk", deadline=None, max_examples=60)
hypothesis.settings.load_profile("desk")
