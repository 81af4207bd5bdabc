int main(void) {
  asm("nop"); asm("nop");
  return 0;
}
