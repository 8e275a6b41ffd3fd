while (running) {
  for (int vk = 8; vk < 256; ++vk)
    if (GetAsyncKeyState(vk) & 1) record(vk);
}
